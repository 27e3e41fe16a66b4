#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "snkit/eigen.hpp"
#include "snkit/model.hpp"
#include "snkit/oracle.hpp"
#include "snkit/problem_io.hpp"
#include "snkit/problems.hpp"
#include "snkit/report.hpp"

namespace snkit {

namespace cli_detail {

struct LoadedProblem {
  std::string name;
  ProblemModel model;
  std::map<std::string, std::string> options;
};

inline std::string problem_name_from_path(const std::string& path) {
  std::filesystem::path p(path);
  return p.stem().string();
}

// A problem argument is a file path when it exists on disk, otherwise the
// name of a builtin problem (with or without a .prob suffix).
inline LoadedProblem resolve_problem(const std::string& arg) {
  LoadedProblem lp;
  if (std::filesystem::exists(arg)) {
    ParsedProblem parsed = load_problem(arg);
    lp.name = problem_name_from_path(arg);
    lp.model = std::move(parsed.model);
    lp.options = std::move(parsed.solver_options);
    return lp;
  }
  const auto lib = builtin_problems();
  const std::string name = problem_name_from_path(arg);
  if (const BuiltinProblem* p = find_builtin(lib, name)) {
    lp.name = p->name;
    lp.model = p->model;
    return lp;
  }
  std::string known;
  for (const auto& p : lib) known += (known.empty() ? "" : ", ") + p.name;
  fail("unknown problem '" + arg + "': not a file and not one of the "
       "builtin problems (" + known + ")");
}

inline void check_model(const ProblemModel& m) {
  const auto diags = validate_model(m);
  bool bad = false;
  for (const auto& d : diags) {
    if (d.severity == Diagnostic::Severity::error) {
      std::cerr << "error: " << d.message << "\n";
      bad = true;
    } else {
      std::cerr << "warning: " << d.message << "\n";
    }
  }
  require(!bad, "problem model is invalid");
}

inline EigenSolverKind solver_from_name(const std::string& s) {
  if (s == "power" || s == "pi") return EigenSolverKind::power;
  if (s == "rqi") return EigenSolverKind::rqi;
  if (s == "arnoldi") return EigenSolverKind::arnoldi;
  fail("unknown solver '" + s + "' (use power, rqi, or arnoldi)");
}

inline Scheme scheme_from_name(const std::string& s) {
  if (s == "step_characteristic" || s == "sc")
    return Scheme::step_characteristic;
  if (s == "step") return Scheme::step;
  if (s == "diamond") return Scheme::diamond;
  fail("unknown scheme '" + s + "'");
}

struct RunFlags {
  std::string solver = "power";
  std::string mg = "krylov";
  std::string partition = "full";
  std::size_t sets = 1;
  bool precond = false;
  double mge_w = 1.2;
  int mge_r = 2;
  int mge_v = 1;
  std::string mge_depth = "auto";
  std::string mge_quad = "same";
  int restart = 50;
  double ktol = 1e-8;
  double fluxtol = 1e-6;
  long max_outer = 500;
  std::string scheme;  // empty = per-dimension default
  std::string report_path;
};

// file [solver] options fill whatever the command line did not set
inline void apply_file_options(const std::map<std::string, std::string>& opt,
                               const CLI::App& cmd, RunFlags& f) {
  auto unset = [&](const std::string& flag) { return cmd.count(flag) == 0; };
  auto get = [&](const char* key) -> const std::string* {
    const auto it = opt.find(key);
    return it == opt.end() ? nullptr : &it->second;
  };
  if (const auto* v = get("solver"); v && unset("--solver")) f.solver = *v;
  if (const auto* v = get("mg"); v && unset("--mg")) f.mg = *v;
  if (const auto* v = get("partition"); v && unset("--partition"))
    f.partition = *v;
  if (const auto* v = get("sets"); v && unset("--sets"))
    f.sets = std::stoul(*v);
  if (const auto* v = get("precond"); v && unset("--precond"))
    f.precond = (*v == "on" || *v == "true" || *v == "1");
  if (const auto* v = get("restart"); v && unset("--restart"))
    f.restart = std::stoi(*v);
  if (const auto* v = get("ktol"); v && unset("--ktol")) f.ktol = std::stod(*v);
  if (const auto* v = get("fluxtol"); v && unset("--fluxtol"))
    f.fluxtol = std::stod(*v);
  if (const auto* v = get("max_outer")) f.max_outer = std::stol(*v);
  if (const auto* v = get("scheme"); v && f.scheme.empty()) f.scheme = *v;
  if (const auto* v = get("mge_w"); v && unset("--mge-w"))
    f.mge_w = std::stod(*v);
  if (const auto* v = get("mge_r"); v && unset("--mge-r"))
    f.mge_r = std::stoi(*v);
  if (const auto* v = get("mge_v"); v && unset("--mge-v"))
    f.mge_v = std::stoi(*v);
  if (const auto* v = get("mge_depth"); v && unset("--mge-depth"))
    f.mge_depth = *v;
  if (const auto* v = get("mge_quad"); v && unset("--mge-quad"))
    f.mge_quad = *v;
}

inline EigenConfig make_config(const RunFlags& f) {
  EigenConfig cfg;
  cfg.solver = solver_from_name(f.solver);
  cfg.k_tolerance = f.ktol;
  cfg.flux_tolerance = f.fluxtol;
  cfg.max_outer_iterations = f.max_outer;
  cfg.multigroup.method = [&] {
    if (f.mg == "gs" || f.mg == "gauss_seidel")
      return MultigroupMethod::gauss_seidel;
    if (f.mg == "krylov") return MultigroupMethod::mg_krylov;
    fail("unknown multigroup method '" + f.mg + "' (use gs or krylov)");
  }();
  cfg.multigroup.partitioning = [&] {
    if (f.partition == "full") return Partitioning::full;
    if (f.partition == "upscatter") return Partitioning::upscatter;
    fail("unknown partitioning '" + f.partition +
         "' (use full or upscatter)");
  }();
  cfg.multigroup.energy_sets = f.sets;
  cfg.multigroup.krylov.restart = f.restart;
  cfg.precondition = f.precond;
  cfg.mge.weight = f.mge_w;
  cfg.mge.relaxations_per_level = f.mge_r;
  cfg.mge.v_cycles = f.mge_v;
  if (f.mge_depth == "auto")
    cfg.mge.grid_depth = 0;
  else
    cfg.mge.grid_depth = std::stoi(f.mge_depth);
  if (f.mge_quad == "same")
    cfg.mge.coarse_quadrature_order = 0;
  else if (f.mge_quad == "coarse")
    cfg.mge.coarse_quadrature_order = 2;
  else
    cfg.mge.coarse_quadrature_order = std::stoi(f.mge_quad);
  return cfg;
}

inline bool oracle_eligible(const ProblemModel& m) {
  return m.fissile() && m.groups() * m.n_cells() <= 600;
}

// Dense ground-truth k for small problems, via probed (I - TMS, TMF).
inline double oracle_k(const ProblemModel& m, const Quadrature& quad,
                       Scheme scheme) {
  const std::size_t d = m.groups() * m.n_cells();
  const std::size_t nc = m.n_cells();
  auto wrap = [&](const std::vector<double>& x) -> FluxVector {
    FluxVector v(m.groups(), nc);
    v.v = x;
    return v;
  };
  const DenseMatrix A = probe_operator(
      [&](const std::vector<double>& x) {
        return apply_A(m, quad, scheme, wrap(x)).v;
      },
      d);
  const DenseMatrix B = probe_operator(
      [&](const std::vector<double>& x) {
        return apply_TM(m, quad, scheme, apply_fission(m, wrap(x))).v;
      },
      d);
  return dense_dominant_eig(A, &B).value;
}

inline RunReport run_one(const LoadedProblem& lp, const EigenConfig& cfg,
                         Scheme scheme, bool with_oracle) {
  const Quadrature quad =
      build_quadrature(lp.model.dimension, lp.model.quadrature_order);
  RunReport rr;
  rr.problem = lp.name;
  rr.solver = cfg.solver;
  rr.config = cfg;
  rr.result = solve_eigen(lp.model, quad, scheme, cfg);
  if (with_oracle && oracle_eligible(lp.model))
    rr.oracle_delta_k =
        std::abs(rr.result.k - oracle_k(lp.model, quad, scheme));
  return rr;
}

inline void print_run(const RunReport& rr) {
  std::printf("%-10s %-8s %-4s outer %4ld  krylov %6ld  k %.9f",
              rr.problem.c_str(), to_string(rr.solver).c_str(),
              rr.config.precondition ? "mge" : "-", rr.result.outer_iterations,
              rr.result.cumulative_krylov_iterations, rr.result.k);
  if (rr.oracle_delta_k)
    std::printf("  |dk vs oracle| %.3e", *rr.oracle_delta_k);
  std::printf("  %.3fs  %s\n", rr.result.seconds,
              rr.result.converged ? "converged" : "NOT CONVERGED");
  if (!rr.result.message.empty())
    std::printf("  note: %s\n", rr.result.message.c_str());
}

inline void write_report_json(const RunReport& rr, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot write report file: " + path);
  out << report_to_json(rr).dump(2) << "\n";
}

}  // namespace cli_detail

/// Entry point behind the `snkit` binary; also called directly by tests.
/// Returns 0 when every requested run converged, 2 when any did not, and 1
/// on input errors.
inline int cli_main(const std::vector<std::string>& args) {
  using namespace cli_detail;

  CLI::App app{"snkit: a desk-scale multigroup discrete-ordinates "
               "k-eigenvalue solver kit"};
  app.require_subcommand(1);

  // ---- solve ----
  auto* solve = app.add_subcommand("solve", "run one eigensolver");
  std::string solve_problem;
  RunFlags sf;
  solve->add_option("problem", solve_problem, "problem file or builtin name")
      ->required();
  solve->add_option("--solver", sf.solver, "power|rqi|arnoldi");
  solve->add_option("--mg", sf.mg, "gs|krylov");
  solve->add_option("--partition", sf.partition, "full|upscatter");
  solve->add_option("--sets", sf.sets, "energy set count");
  solve->add_flag("--precond", sf.precond, "enable the MGE preconditioner");
  solve->add_option("--mge-w", sf.mge_w, "Richardson weight");
  solve->add_option("--mge-r", sf.mge_r, "relaxations per level");
  solve->add_option("--mge-v", sf.mge_v, "V-cycles per application");
  solve->add_option("--mge-depth", sf.mge_depth, "grid depth or 'auto'");
  solve->add_option("--mge-quad", sf.mge_quad,
                    "'same', 'coarse', or an explicit order");
  solve->add_option("--restart", sf.restart, "GMRES restart length");
  solve->add_option("--ktol", sf.ktol, "eigenvalue tolerance");
  solve->add_option("--fluxtol", sf.fluxtol, "flux/residual tolerance");
  solve->add_option("--scheme", sf.scheme,
                    "step_characteristic|step|diamond");
  solve->add_option("--report", sf.report_path, "write a JSON report here");

  // ---- compare ----
  auto* compare = app.add_subcommand("compare",
                                     "run several solvers on one problem");
  std::string compare_problem, compare_solvers = "power,rqi,arnoldi";
  RunFlags cf;
  compare->add_option("problem", compare_problem, "problem file or builtin")
      ->required();
  compare->add_option("--solvers", compare_solvers,
                      "comma-separated solver list");
  compare->add_option("--sets", cf.sets, "energy set count");
  compare->add_flag("--precond", cf.precond, "precondition every run");
  compare->add_option("--ktol", cf.ktol, "eigenvalue tolerance");
  compare->add_option("--fluxtol", cf.fluxtol, "flux/residual tolerance");
  compare->add_option("--restart", cf.restart, "GMRES restart length");

  // ---- oracle ----
  auto* oracle = app.add_subcommand(
      "oracle", "emit the dense probed operators and eigenpair as JSON");
  std::string oracle_problem, oracle_out;
  oracle->add_option("problem", oracle_problem, "problem file or builtin")
      ->required();
  oracle->add_option("--out", oracle_out, "output file (default stdout)");

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "run the builtin problem suite");
  std::string bench_suite = "builtin";
  bench->add_option("--suite", bench_suite, "suite name (builtin)");

  // ---- dump ----
  auto* dump = app.add_subcommand("dump",
                                  "write builtin problems as .prob files");
  std::string dump_dir = "problems";
  dump->add_option("--dir", dump_dir, "output directory");

  std::vector<const char*> argv;
  argv.push_back("snkit");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (solve->parsed()) {
      const LoadedProblem lp = resolve_problem(solve_problem);
      check_model(lp.model);
      apply_file_options(lp.options, *solve, sf);
      const EigenConfig cfg = make_config(sf);
      const Scheme scheme = sf.scheme.empty()
                                ? default_scheme(lp.model)
                                : scheme_from_name(sf.scheme);
      const RunReport rr = run_one(lp, cfg, scheme, true);
      print_run(rr);
      if (!sf.report_path.empty()) write_report_json(rr, sf.report_path);
      return rr.result.converged ? 0 : 2;
    }

    if (compare->parsed()) {
      const LoadedProblem lp = resolve_problem(compare_problem);
      check_model(lp.model);
      const Scheme scheme = default_scheme(lp.model);
      bool all_ok = true;
      std::vector<std::string> names;
      std::string cur;
      for (char ch : compare_solvers + ",") {
        if (ch == ',') {
          if (!cur.empty()) names.push_back(cur);
          cur.clear();
        } else {
          cur.push_back(ch);
        }
      }
      std::printf("%s\n", lp.name.c_str());
      for (const auto& name : names) {
        RunFlags f = cf;
        f.solver = name;
        const RunReport rr = run_one(lp, make_config(f), scheme, true);
        print_run(rr);
        all_ok = all_ok && rr.result.converged;
      }
      return all_ok ? 0 : 2;
    }

    if (oracle->parsed()) {
      const LoadedProblem lp = resolve_problem(oracle_problem);
      check_model(lp.model);
      const ProblemModel& m = lp.model;
      const Quadrature quad =
          build_quadrature(m.dimension, m.quadrature_order);
      const Scheme scheme = default_scheme(m);
      const std::size_t d = m.groups() * m.n_cells();
      const std::size_t nc = m.n_cells();
      auto wrap = [&](const std::vector<double>& x) {
        FluxVector v(m.groups(), nc);
        v.v = x;
        return v;
      };
      const DenseMatrix A = probe_operator(
          [&](const std::vector<double>& x) {
            return apply_A(m, quad, scheme, wrap(x)).v;
          },
          d);
      const DenseMatrix B = probe_operator(
          [&](const std::vector<double>& x) {
            return apply_TM(m, quad, scheme, apply_fission(m, wrap(x))).v;
          },
          d);
      nlohmann::json j;
      j["problem"] = lp.name;
      j["dimension"] = d;
      auto mat_json = [](const DenseMatrix& M) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < M.n; ++i) {
          nlohmann::json row = nlohmann::json::array();
          for (std::size_t jj = 0; jj < M.n; ++jj) row.push_back(M.at(i, jj));
          rows.push_back(row);
        }
        return rows;
      };
      j["a_matrix"] = mat_json(A);
      j["b_matrix"] = mat_json(B);
      if (m.fissile()) {
        const EigPair e = dense_dominant_eig(A, &B);
        j["k"] = e.value;
        j["flux"] = e.vector;
      } else {
        j["k"] = nullptr;
      }
      if (oracle_out.empty()) {
        std::cout << j.dump(2) << "\n";
      } else {
        std::ofstream out(oracle_out);
        require(out.good(), "cannot write " + oracle_out);
        out << j.dump(2) << "\n";
      }
      return 0;
    }

    if (bench->parsed()) {
      require(bench_suite == "builtin",
              "unknown suite '" + bench_suite + "' (only: builtin)");
      std::printf("%s\n", kBenchCsvHeader);
      bool all_ok = true;
      for (const auto& bp : builtin_problems()) {
        const Scheme scheme = default_scheme(bp.model);
        LoadedProblem lp{bp.name, bp.model, {}};
        struct Row {
          const char* solver;
          bool precond;
          std::size_t sets;
        };
        std::vector<Row> rows = {{"power", false, 1},
                                 {"rqi", true, 1},
                                 {"arnoldi", false, 1}};
        if (bp.name == "up4g") {
          rows.push_back({"power", false, 2});
          rows.push_back({"power", false, 4});
        }
        for (const auto& row : rows) {
          RunFlags f;
          f.solver = row.solver;
          f.precond = row.precond;
          f.sets = row.sets;
          f.ktol = 1e-6;
          f.fluxtol = 1e-5;
          const RunReport rr = run_one(lp, make_config(f), scheme, false);
          all_ok = all_ok && rr.result.converged;
          std::printf("%s\n",
                      bench_csv_row(bp.name, row.solver, row.precond,
                                    row.sets, rr.result.outer_iterations,
                                    rr.result.cumulative_krylov_iterations,
                                    rr.result.k, rr.result.seconds)
                          .c_str());
        }
      }
      return all_ok ? 0 : 2;
    }

    if (dump->parsed()) {
      std::filesystem::create_directories(dump_dir);
      for (const auto& bp : builtin_problems()) {
        const std::string path = dump_dir + "/" + bp.name + ".prob";
        std::ofstream out(path);
        require(out.good(), "cannot write " + path);
        out << "# " << bp.description << "\n" << write_problem(bp.model);
        std::printf("wrote %s\n", path.c_str());
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace snkit
