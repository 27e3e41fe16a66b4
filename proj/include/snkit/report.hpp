#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "snkit/eigen.hpp"
#include "snkit/model.hpp"

namespace snkit {

/// One solver run on one problem, as reported by the CLI.
struct RunReport {
  std::string problem;
  EigenSolverKind solver = EigenSolverKind::power;
  EigenConfig config;
  EigenReport result;
  std::optional<double> oracle_delta_k;  // |k - k_oracle| when d <= 600
};

inline nlohmann::json config_to_json(const EigenConfig& c) {
  nlohmann::json j;
  j["k_tolerance"] = c.k_tolerance;
  j["flux_tolerance"] = c.flux_tolerance;
  j["max_outer_iterations"] = c.max_outer_iterations;
  j["initial_shift"] = c.initial_shift;
  j["arnoldi_subspace"] = c.arnoldi_subspace;
  j["multigroup_method"] =
      c.multigroup.method == MultigroupMethod::gauss_seidel ? "gs" : "krylov";
  j["partitioning"] =
      c.multigroup.partitioning == Partitioning::full ? "full" : "upscatter";
  j["energy_sets"] = c.multigroup.energy_sets;
  j["restart"] = c.multigroup.krylov.restart;
  j["krylov_tolerance"] = c.multigroup.krylov.tolerance;
  j["precondition"] = c.precondition;
  if (c.precondition) {
    j["mge_weight"] = c.mge.weight;
    j["mge_relaxations"] = c.mge.relaxations_per_level;
    j["mge_v_cycles"] = c.mge.v_cycles;
    j["mge_depth"] = c.mge.grid_depth == 0
                         ? nlohmann::json("auto")
                         : nlohmann::json(c.mge.grid_depth);
    j["mge_quadrature"] = c.mge.coarse_quadrature_order == 0
                              ? nlohmann::json("same")
                              : nlohmann::json(c.mge.coarse_quadrature_order);
  }
  return j;
}

/// The JSON report schema: problem, solver, config, k, outer_iterations,
/// krylov_iterations, converged, history, seconds.
inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json j;
  j["problem"] = r.problem;
  j["solver"] = to_string(r.solver);
  j["config"] = config_to_json(r.config);
  j["k"] = r.result.k;
  j["outer_iterations"] = r.result.outer_iterations;
  j["krylov_iterations"] = r.result.cumulative_krylov_iterations;
  j["converged"] = r.result.converged;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : r.result.history)
    hist.push_back({{"k", h.k}, {"flux_delta", h.flux_delta}});
  j["history"] = hist;
  j["seconds"] = r.result.seconds;
  return j;
}

inline constexpr const char* kBenchCsvHeader =
    "problem,solver,precond,sets,outer,krylov,k,seconds";

inline std::string bench_csv_row(const std::string& problem,
                                 const std::string& solver, bool precond,
                                 std::size_t sets, long outer, long krylov,
                                 double k, double seconds) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%s,%s,%zu,%ld,%ld,%.12g,%.6g",
                problem.c_str(), solver.c_str(), precond ? "yes" : "no", sets,
                outer, krylov, k, seconds);
  return buf;
}

}  // namespace snkit
