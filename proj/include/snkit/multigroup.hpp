#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "snkit/core.hpp"
#include "snkit/energy_sets.hpp"
#include "snkit/flux.hpp"
#include "snkit/krylov.hpp"
#include "snkit/model.hpp"
#include "snkit/operators.hpp"
#include "snkit/quadrature.hpp"
#include "snkit/sweep.hpp"

namespace snkit {

enum class MultigroupMethod { gauss_seidel, mg_krylov };
enum class Partitioning { full, upscatter };

struct MultigroupConfig {
  MultigroupMethod method = MultigroupMethod::mg_krylov;
  Partitioning partitioning = Partitioning::full;
  long gs_max_iterations = 1000;
  double gs_tolerance = 1e-7;
  KrylovConfig krylov;
  std::size_t energy_sets = 1;
};

struct MultigroupResult {
  FluxVector flux;
  bool converged = false;
  long gs_outer_iterations = 0;  // upscatter-block energy iterations
  long krylov_iterations = 0;    // cumulative inner iterations
  double final_relative_residual = 0.0;
  KrylovStats block_stats;       // stats of the block GMRES solve, if any
  std::string message;
};

/// Right preconditioner hook for the block solve (empty = none).
using PrecondFn =
    std::function<void(const std::vector<double>&, std::vector<double>&)>;

namespace detail {

// Within-group solve: (I - TM S_gg) phi_g = rhs_g over one group's cells.
// rho folds the group's own fission self-coupling into S_gg when a shifted
// system is solved group-by-group (the Gauss-Seidel path).
inline std::vector<double> within_group_solve(
    const ProblemModel& m, const Quadrature& quad, Scheme scheme,
    std::size_t g, const std::vector<double>& rhs, double rho,
    const KrylovConfig& cfg, KrylovStats& stats) {
  const std::size_t nc = m.n_cells();
  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    std::vector<double> src(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& xs = m.mat(c);
      double s = xs.scat[g][g];
      if (rho != 0.0) s += rho * xs.chi[g] * xs.nu_sigma_f[g];
      src[c] = s * in[c];
    }
    const auto psi = sweep_group_isotropic(m, quad, g, src, scheme);
    out.assign(nc, 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
      double acc = 0.0;
      for (std::size_t a = 0; a < quad.size(); ++a)
        acc += quad.weight[a] * psi.cell(a, c);
      out[c] = in[c] - acc;
    }
  };
  return gmres(apply, rhs, {}, cfg, stats);
}

// TM applied to one group's per-cell moments.
inline std::vector<double> tm_group(const ProblemModel& m,
                                    const Quadrature& quad, Scheme scheme,
                                    std::size_t g,
                                    std::span<const double> moments) {
  const auto psi = sweep_group_isotropic(m, quad, g, moments, scheme);
  const std::size_t nc = m.n_cells();
  std::vector<double> out(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    double acc = 0.0;
    for (std::size_t a = 0; a < quad.size(); ++a)
      acc += quad.weight[a] * psi.cell(a, c);
    out[c] = acc;
  }
  return out;
}

// Gauss-Seidel style update of one group given the current flux iterate:
// solves (I - TM S~_gg) phi_g = TM(sum_{g' != g} S~_gg' phi_g') + b_g with
// new values for g' < g and old values for g' > g already in `phi`.
inline void gs_update_group(const ProblemModel& m, const Quadrature& quad,
                            Scheme scheme, std::size_t g, double rho,
                            const FluxVector& b, FluxVector& phi,
                            const KrylovConfig& inner_cfg, long& kry_iters,
                            bool& inner_ok) {
  const std::size_t nc = m.n_cells();
  const std::size_t G = phi.groups;
  std::vector<double> src(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& xs = m.mat(c);
    double prod = 0.0;
    if (rho != 0.0) {
      for (std::size_t gp = 0; gp < G; ++gp)
        if (gp != g) prod += xs.nu_sigma_f[gp] * phi.at(gp, c);
    }
    double acc = 0.0;
    for (std::size_t gp = 0; gp < G; ++gp)
      if (gp != g) acc += xs.scat[g][gp] * phi.at(gp, c);
    if (rho != 0.0) acc += rho * xs.chi[g] * prod;
    src[c] = acc;
  }
  std::vector<double> rhs = tm_group(m, quad, scheme, g, src);
  for (std::size_t c = 0; c < nc; ++c) rhs[c] += b.at(g, c);

  KrylovStats st;
  const auto x = within_group_solve(m, quad, scheme, g, rhs, rho, inner_cfg, st);
  kry_iters += st.iterations;
  inner_ok = inner_ok && st.converged;
  for (std::size_t c = 0; c < nc; ++c) phi.at(g, c) = x[c];
}

}  // namespace detail

/// Gauss-Seidel in energy: groups are swept from highest energy (g = 0) to
/// lowest; downscatter-only groups are solved exactly once, then the
/// upscatter block is iterated until its relative L2 flux change falls below
/// gs_tolerance. Within-group systems are solved by single-group GMRES at
/// 0.1 x gs_tolerance with restart 30. `b` is the fixed-source right side in
/// flux space (TM applied to the emission density). A nonzero `rho` solves
/// the shifted system S + rho F group-by-group, which is expected to fail to
/// converge when the shift is close to the spectrum; the failure is reported
/// in the result, not thrown.
inline MultigroupResult solve_gauss_seidel(const ProblemModel& m,
                                           const Quadrature& quad,
                                           Scheme scheme, const FluxVector& b,
                                           const MultigroupConfig& cfg,
                                           double rho = 0.0) {
  require(cfg.energy_sets == 1,
          "Gauss-Seidel is serial in energy; energy_sets must be 1");
  const std::size_t G = m.groups();
  const std::size_t nc = m.n_cells();

  KrylovConfig inner = cfg.krylov;
  inner.restart = 30;
  inner.tolerance = 0.1 * cfg.gs_tolerance;

  MultigroupResult res;
  res.flux = FluxVector(G, nc);
  bool inner_ok = true;

  // fission coupling acts like upscatter when a shift folds F into S
  std::size_t u = first_upscatter_group(m.materials);
  if (rho != 0.0) {
    for (std::size_t g = 0; g < G && g < u; ++g)
      if (fission_couples_group(m.materials, g)) u = g;
  }

  // single downward pass; groups below u are final after this
  for (std::size_t g = 0; g < G; ++g)
    detail::gs_update_group(m, quad, scheme, g, rho, b, res.flux, inner,
                            res.krylov_iterations, inner_ok);

  if (u == G) {
    res.converged = inner_ok;
    res.gs_outer_iterations = 0;
    return res;
  }

  std::vector<double> prev_block((G - u) * nc);
  for (long it = 1; it <= cfg.gs_max_iterations; ++it) {
    std::copy(res.flux.v.begin() + u * nc, res.flux.v.end(),
              prev_block.begin());
    for (std::size_t g = u; g < G; ++g)
      detail::gs_update_group(m, quad, scheme, g, rho, b, res.flux, inner,
                              res.krylov_iterations, inner_ok);
    res.gs_outer_iterations = it;

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < prev_block.size(); ++i) {
      const double d = res.flux.v[u * nc + i] - prev_block[i];
      num += d * d;
      den += res.flux.v[u * nc + i] * res.flux.v[u * nc + i];
    }
    const double change = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    res.final_relative_residual = change;
    if (change <= cfg.gs_tolerance) {
      res.converged = inner_ok;
      return res;
    }
  }
  res.converged = false;
  res.message = "Gauss-Seidel upscatter iteration did not converge in " +
                std::to_string(cfg.gs_max_iterations) + " passes";
  return res;
}

/// MG block Krylov solve of (I - TM S~) phi = b over all groups (full
/// partitioning) or over the upscatter block fed by a Gauss-Seidel cascade
/// of the downscatter-only groups (upscatter partitioning).
/// Energy sets partition the block; each set computes its own rows of the
/// matvec and one reduce-plus-scatter per application is the only cross-set
/// exchange, so the iterate sequence does not depend on the set count.
inline MultigroupResult solve_mg_krylov(
    const ProblemModel& m, const Quadrature& quad, Scheme scheme,
    const FluxVector& b, const MultigroupConfig& cfg,
    const ShiftedOperatorSpec* shift = nullptr,
    const PrecondFn* precond = nullptr) {
  const std::size_t G = m.groups();
  const std::size_t nc = m.n_cells();
  const double rho = shift ? shift->rho : 0.0;

  GroupRange block = GroupRange::all(m);
  MultigroupResult res;
  res.flux = FluxVector(G, nc);
  bool inner_ok = true;

  if (cfg.partitioning == Partitioning::upscatter) {
    const std::size_t u = first_upscatter_group(m.materials);
    block = {u, G};
    if (rho != 0.0)
      for (std::size_t g = 0; g < u; ++g)
        require(!fission_couples_group(m.materials, g),
                "upscatter partitioning cannot hold the shifted system: "
                "fission couples group " + std::to_string(g) +
                " outside the Krylov block; use full partitioning");
    KrylovConfig inner = cfg.krylov;
    inner.restart = 30;
    inner.tolerance = 0.1 * cfg.gs_tolerance;
    // triangular cascade over the downscatter-only groups
    for (std::size_t g = 0; g < u; ++g)
      detail::gs_update_group(m, quad, scheme, g, 0.0, b, res.flux, inner,
                              res.krylov_iterations, inner_ok);
  }

  if (block.count() == 0) {
    res.converged = inner_ok;
    return res;
  }

  const auto layout = make_energy_sets(block, cfg.energy_sets);

  // b_block = b + TM(S_up_source phi_down), zero outside the block
  std::vector<double> rhs(G * nc, 0.0);
  if (cfg.partitioning == Partitioning::upscatter && block.begin > 0) {
    const FluxVector upsrc =
        apply_scatter(m, res.flux, {0, block.begin}, block);
    for (std::size_t g = block.begin; g < G; ++g) {
      const auto t = detail::tm_group(m, quad, scheme, g, upsrc.group(g));
      for (std::size_t c = 0; c < nc; ++c)
        rhs[g * nc + c] = b.at(g, c) + t[c];
    }
  } else {
    for (std::size_t g = block.begin; g < block.end; ++g)
      for (std::size_t c = 0; c < nc; ++c) rhs[g * nc + c] = b.at(g, c);
  }

  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    out.assign(G * nc, 0.0);
    std::vector<std::vector<double>> parts(layout.set_count());
    run_per_set(layout, [&](std::size_t s) {
      parts[s].assign(G * nc, 0.0);
      detail::block_source_rows(m, in, block, rho, layout.sets[s].begin,
                                layout.sets[s].end, parts[s]);
    });
    const std::vector<double> src = reduce_plus_scatter(layout, parts);
    run_per_set(layout, [&](std::size_t s) {
      detail::block_sweep_rows(m, quad, scheme, in, src,
                               layout.sets[s].begin, layout.sets[s].end, out);
    });
    // identity on groups outside the block
    for (std::size_t g = 0; g < block.begin; ++g)
      for (std::size_t c = 0; c < nc; ++c)
        out[g * nc + c] = in[g * nc + c];
    for (std::size_t g = block.end; g < G; ++g)
      for (std::size_t c = 0; c < nc; ++c)
        out[g * nc + c] = in[g * nc + c];
  };

  std::vector<double> x;
  if (precond && *precond) {
    x = gmres(apply, rhs, {}, cfg.krylov, *precond, res.block_stats);
  } else {
    x = gmres(apply, rhs, {}, cfg.krylov, res.block_stats);
  }
  res.krylov_iterations += res.block_stats.iterations;
  res.final_relative_residual = res.block_stats.final_relative_residual;
  if (!res.block_stats.converged) {
    inner_ok = false;
    res.message = "block GMRES did not converge: relative residual " +
                  std::to_string(res.block_stats.final_relative_residual);
  }
  for (std::size_t g = block.begin; g < block.end; ++g)
    for (std::size_t c = 0; c < nc; ++c) res.flux.at(g, c) = x[g * nc + c];
  res.converged = inner_ok;
  return res;
}

/// Dispatch on the configured multigroup method.
inline MultigroupResult solve_multigroup(
    const ProblemModel& m, const Quadrature& quad, Scheme scheme,
    const FluxVector& b, const MultigroupConfig& cfg,
    const ShiftedOperatorSpec* shift = nullptr,
    const PrecondFn* precond = nullptr) {
  if (cfg.method == MultigroupMethod::gauss_seidel) {
    require(precond == nullptr || !*precond,
            "the MGE preconditioner applies to the MG Krylov solver only");
    return solve_gauss_seidel(m, quad, scheme, b, cfg,
                              shift ? shift->rho : 0.0);
  }
  return solve_mg_krylov(m, quad, scheme, b, cfg, shift, precond);
}

}  // namespace snkit
