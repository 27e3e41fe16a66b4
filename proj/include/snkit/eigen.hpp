#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "snkit/core.hpp"
#include "snkit/flux.hpp"
#include "snkit/mge.hpp"
#include "snkit/model.hpp"
#include "snkit/multigroup.hpp"
#include "snkit/operators.hpp"
#include "snkit/oracle.hpp"
#include "snkit/quadrature.hpp"
#include "snkit/sweep.hpp"

namespace snkit {

enum class EigenSolverKind { power, rqi, arnoldi };

inline std::string to_string(EigenSolverKind k) {
  switch (k) {
    case EigenSolverKind::power: return "power";
    case EigenSolverKind::rqi: return "rqi";
    case EigenSolverKind::arnoldi: return "arnoldi";
  }
  return "?";
}

struct EigenConfig {
  EigenSolverKind solver = EigenSolverKind::power;
  double k_tolerance = 1e-8;
  double flux_tolerance = 1e-6;
  double fission_l2_tolerance = 1.0;    // PI only, relative to new source
  double fission_inf_tolerance = 0.01;  // PI only
  long max_outer_iterations = 500;
  double initial_shift = 1.0;           // RQI rho_0, in 1/k units
  int arnoldi_subspace = 50;
  bool arnoldi_energy_independent = false;
  MultigroupConfig multigroup;
  bool precondition = false;
  MgeParams mge;
};

struct OuterRecord {
  double k = 0.0;
  double flux_delta = 0.0;
};

struct EigenReport {
  double k = 0.0;
  double gamma = 0.0;
  FluxVector flux;  // unit L2, max entry positive
  long outer_iterations = 0;
  long cumulative_krylov_iterations = 0;
  std::vector<OuterRecord> history;
  double seconds = 0.0;
  bool converged = false;
  std::string message;
};

namespace detail {

inline void orient_nonnegative(FluxVector& phi) {
  double big = 0.0;
  for (double v : phi.v)
    if (std::abs(v) > std::abs(big)) big = v;
  if (big < 0.0)
    for (double& v : phi.v) v = -v;
}

inline void normalize_unit(FluxVector& phi) {
  const double n = norm2(phi);
  require(n > 0.0, "cannot normalize the zero flux");
  scale(phi.v, 1.0 / n);
  orient_nonnegative(phi);
}

// per-cell fission production f^T phi
inline std::vector<double> fission_production(const ProblemModel& m,
                                              const FluxVector& phi) {
  const std::size_t nc = m.n_cells();
  std::vector<double> s(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& xs = m.mat(c);
    double acc = 0.0;
    for (std::size_t g = 0; g < phi.groups; ++g)
      acc += xs.nu_sigma_f[g] * phi.at(g, c);
    s[c] = acc;
  }
  return s;
}

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

// The Krylov block the multigroup solver will use, for building the
// preconditioner over the same group ranges.
inline GroupRange krylov_block(const ProblemModel& m,
                               const MultigroupConfig& cfg) {
  if (cfg.partitioning == Partitioning::upscatter)
    return {first_upscatter_group(m.materials), m.groups()};
  return GroupRange::all(m);
}

struct PrecondHandle {
  std::shared_ptr<MgePreconditioner> mge;
  PrecondFn fn;
  const PrecondFn* get() const { return mge ? &fn : nullptr; }
};

// Builds the MGE preconditioner on the unshifted operator over the same
// block and set layout the multigroup solver uses.
inline PrecondHandle make_preconditioner(const ProblemModel& m,
                                         const Quadrature& quad, Scheme scheme,
                                         const EigenConfig& cfg) {
  PrecondHandle h;
  if (!cfg.precondition) return h;
  require(cfg.multigroup.method == MultigroupMethod::mg_krylov,
          "the MGE preconditioner applies to the MG Krylov solver only");
  const GroupRange block = krylov_block(m, cfg.multigroup);
  const auto layout = make_energy_sets(block, cfg.multigroup.energy_sets);
  h.mge = std::make_shared<MgePreconditioner>(m, quad, scheme, layout,
                                              cfg.mge);
  auto pc = h.mge;
  h.fn = [pc](const std::vector<double>& in, std::vector<double>& out) {
    (*pc)(in, out);
  };
  return h;
}

}  // namespace detail

/// Power iteration: each outer solves the fixed-source
/// system (I - TMS) phi_new = (1/k) TMF phi and updates k by the ratio of
/// fission-production norms. Converges when the relative k change, the
/// relative L2 fission-source change, and the relative infinity-norm
/// fission-source change are all within tolerance.
inline EigenReport solve_power(const ProblemModel& m, const Quadrature& quad,
                               Scheme scheme, const EigenConfig& cfg) {
  require(m.fissile(), "power iteration requires a fissile problem");
  detail::Timer timer;
  const auto precond = detail::make_preconditioner(m, quad, scheme, cfg);

  EigenReport rep;
  FluxVector phi(m.groups(), m.n_cells(), 1.0);
  detail::normalize_unit(phi);
  double k = 1.0;
  std::vector<double> fsrc = detail::fission_production(m, phi);
  bool inner_ok = true;

  for (long i = 0; i < cfg.max_outer_iterations; ++i) {
    FluxVector b = apply_fission(m, phi);
    scale(b.v, 1.0 / k);
    b = apply_TM(m, quad, scheme, b);

    const MultigroupResult mg = solve_multigroup(m, quad, scheme, b,
                                                 cfg.multigroup, nullptr,
                                                 precond.get());
    rep.cumulative_krylov_iterations += mg.krylov_iterations;
    inner_ok = inner_ok && mg.converged;

    const std::vector<double> fsrc_new =
        detail::fission_production(m, mg.flux);
    const double nf_new = norm2(std::span<const double>(fsrc_new));
    const double nf_old = norm2(std::span<const double>(fsrc));
    require(nf_old > 0.0 && nf_new > 0.0,
            "fission source vanished during power iteration");
    const double k_new = k * nf_new / nf_old;

    std::vector<double> ds(fsrc_new.size());
    for (std::size_t j = 0; j < ds.size(); ++j) ds[j] = fsrc_new[j] - fsrc[j];
    const double dl2 = norm2(std::span<const double>(ds)) / nf_new;
    const double dinf = norm_inf(std::span<const double>(ds)) /
                        norm_inf(std::span<const double>(fsrc_new));
    const double dk = std::abs(k_new - k) / std::abs(k_new);

    FluxVector phi_unit = mg.flux;
    detail::normalize_unit(phi_unit);
    FluxVector prev_unit = phi;
    detail::normalize_unit(prev_unit);
    double fd = 0.0;
    for (std::size_t j = 0; j < phi_unit.v.size(); ++j) {
      const double d = phi_unit.v[j] - prev_unit.v[j];
      fd += d * d;
    }
    rep.history.push_back({k_new, std::sqrt(fd)});
    rep.outer_iterations = i + 1;

    phi = mg.flux;
    fsrc = fsrc_new;
    k = k_new;

    if (dk <= cfg.k_tolerance && dl2 <= cfg.fission_l2_tolerance &&
        dinf <= cfg.fission_inf_tolerance) {
      rep.converged = inner_ok;
      break;
    }
  }

  rep.k = k;
  rep.gamma = 1.0 / k;
  rep.flux = phi;
  detail::normalize_unit(rep.flux);
  if (!rep.converged && rep.message.empty())
    rep.message = rep.outer_iterations >= cfg.max_outer_iterations
                      ? "power iteration hit the outer-iteration cap"
                      : "an inner multigroup solve did not converge";
  rep.seconds = timer.seconds();
  return rep;
}

/// Rayleigh Quotient Iteration: each outer solves the shifted system
/// (I - TM(S + rho F)) phi_new = TMF phi with rho the Rayleigh quotient of
/// the current iterate (initial_shift on the first outer), then
/// renormalizes. The preconditioner, when enabled, is built once from the
/// unshifted operator. The (gamma - rho) right-side scalar is omitted.
inline EigenReport solve_rqi(const ProblemModel& m, const Quadrature& quad,
                             Scheme scheme, const EigenConfig& cfg) {
  require(m.fissile(), "RQI requires a fissile problem");
  require(cfg.multigroup.method == MultigroupMethod::mg_krylov,
          "RQI requires the MG Krylov multigroup solver: Gauss-Seidel may "
          "fail to converge once fission is folded into the scattering "
          "matrix");
  detail::Timer timer;
  const auto precond = detail::make_preconditioner(m, quad, scheme, cfg);
  constexpr double rho_max = 1.0 / 1e-3;  // k floor of 1e-3

  EigenReport rep;
  FluxVector phi(m.groups(), m.n_cells(), 1.0);
  detail::normalize_unit(phi);
  double k_prev = 0.0;
  bool have_k_prev = false;
  double rho_last_good = cfg.initial_shift;
  int consecutive_failures = 0;

  for (long i = 0; i < cfg.max_outer_iterations; ++i) {
    double rho = i == 0 ? cfg.initial_shift
                        : rayleigh_quotient(m, quad, scheme, phi);
    rho = std::min(std::max(rho, 0.0), rho_max);

    const FluxVector b =
        apply_TM(m, quad, scheme, apply_fission(m, phi));

    ShiftedOperatorSpec shift{rho};
    MultigroupResult mg = solve_mg_krylov(m, quad, scheme, b, cfg.multigroup,
                                          &shift, precond.get());
    rep.cumulative_krylov_iterations += mg.krylov_iterations;
    if (!mg.converged) {
      // one relaxation of the shift toward the last successful one
      const double relaxed = 0.5 * (rho + rho_last_good);
      shift.rho = relaxed;
      const MultigroupResult retry = solve_mg_krylov(
          m, quad, scheme, b, cfg.multigroup, &shift, precond.get());
      rep.cumulative_krylov_iterations += retry.krylov_iterations;
      if (retry.converged) {
        mg = retry;
        rho = relaxed;
      }
    }
    if (mg.converged) {
      consecutive_failures = 0;
      rho_last_good = rho;
    } else if (++consecutive_failures >= 3) {
      rep.converged = false;
      rep.message = "RQI aborted: the shifted solve failed for 3 consecutive "
                    "outers (last shift " + std::to_string(shift.rho) +
                    ", relative residual " +
                    std::to_string(mg.final_relative_residual) + ")";
      rep.outer_iterations = i + 1;
      rep.k = have_k_prev ? k_prev : 0.0;
      rep.gamma = rep.k != 0.0 ? 1.0 / rep.k : 0.0;
      rep.flux = phi;
      rep.seconds = timer.seconds();
      return rep;
    }

    FluxVector phi_new = mg.flux;
    detail::normalize_unit(phi_new);

    const double rho_new = rayleigh_quotient(m, quad, scheme, phi_new);
    const double k_new = 1.0 / std::min(std::max(rho_new, 1e-12), rho_max);

    double fd = 0.0;
    for (std::size_t j = 0; j < phi_new.v.size(); ++j) {
      const double d = phi_new.v[j] - phi.v[j];
      fd += d * d;
    }
    const double flux_delta = std::sqrt(fd);
    rep.history.push_back({k_new, flux_delta});
    rep.outer_iterations = i + 1;

    const bool k_ok =
        have_k_prev && std::abs(k_new - k_prev) / std::abs(k_new) <=
                           cfg.k_tolerance;
    phi = phi_new;
    k_prev = k_new;
    have_k_prev = true;

    if (k_ok && flux_delta <= cfg.flux_tolerance && mg.converged) {
      rep.converged = true;
      break;
    }
  }

  rep.k = k_prev;
  rep.gamma = 1.0 / k_prev;
  rep.flux = phi;
  if (!rep.converged && rep.message.empty())
    rep.message = "RQI hit the outer-iteration cap";
  rep.seconds = timer.seconds();
  return rep;
}

/// Dominant eigenvalue of a small upper-Hessenberg matrix by power
/// iteration (started from e_1, which is cyclic for an irreducible
/// Hessenberg matrix) with Rayleigh-quotient polishing. A period-2
/// oscillation means the dominant modulus is attained by a complex pair or
/// a tie; the transport fundamental mode is real and simple, so this is
/// surfaced as an error suggesting a different subspace size.
inline EigPair dominant_ritz(const DenseMatrix& h) {
  const std::size_t n = h.n;
  require(n >= 1, "empty Hessenberg matrix");
  std::vector<double> x(n, 0.0);
  x[0] = 1.0;  // e1 is cyclic for an irreducible Hessenberg matrix
  std::vector<double> x_prev;
  double lam_prev = 0.0;
  int oscillating = 0;
  const long max_steps = 10000;
  auto sign_aligned_delta = [](const std::vector<double>& a,
                               const std::vector<double>& b) {
    double dm = 0.0, dp = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double m = a[i] - b[i], p = a[i] + b[i];
      dm += m * m;
      dp += p * p;
    }
    return std::sqrt(std::min(dm, dp));
  };
  for (long s = 1; s <= max_steps; ++s) {
    std::vector<double> y = h.matvec(x);
    const double lam_new =
        dot(std::span<const double>(y), std::span<const double>(x));
    const double ny = norm2(std::span<const double>(y));
    require(ny > 0.0, "Ritz power iteration hit the zero vector");
    scale(y, 1.0 / ny);

    const double dir_delta = sign_aligned_delta(y, x);
    if (!x_prev.empty()) {
      // period-2 return with nonzero step: a +/- tie or a complex pair
      const double period2 = sign_aligned_delta(y, x_prev);
      oscillating =
          (period2 < 1e-10 && dir_delta > 1e-6) ? oscillating + 1 : 0;
      if (oscillating > 100)
        fail("dominant Ritz value appears complex or tied; change the "
             "Arnoldi subspace size");
    }
    x_prev = x;
    x = std::move(y);
    if (s >= 2 && rel_diff(lam_new, lam_prev) <= 1e-12 && dir_delta <= 1e-11)
      break;
    lam_prev = lam_new;
    if (s == max_steps)
      fail("dominant Ritz value did not converge; change the Arnoldi "
           "subspace size");
  }
  const auto hx = h.matvec(x);
  const double lambda =
      dot(std::span<const double>(x), std::span<const double>(hx)) /
      dot(std::span<const double>(x), std::span<const double>(x));
  return {lambda, x};
}

namespace detail {

struct ArnoldiFill {
  std::vector<std::vector<double>> v;  // basis, size k+1 (or k on breakdown)
  DenseMatrix h;                       // k x k square part
  double h_next = 0.0;                 // subdiagonal h_{k+1,k}
  std::size_t k = 0;
  bool breakdown = false;
};

// Arnoldi process with modified Gram-Schmidt and one conditional
// re-orthogonalization pass, identical policy to the GMRES kernel.
template <class OpFn>
ArnoldiFill arnoldi_fill(OpFn&& op, const std::vector<double>& v0,
                         std::size_t m) {
  ArnoldiFill f;
  f.v.push_back(v0);
  std::vector<std::vector<double>> hcols;
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> w = op(f.v[j]);
    const double pre = norm2(std::span<const double>(w));
    std::vector<double> h(j + 2, 0.0);
    for (std::size_t i = 0; i <= j; ++i) {
      h[i] = dot(std::span<const double>(w), std::span<const double>(f.v[i]));
      axpy(-h[i], f.v[i], w);
    }
    double post = norm2(std::span<const double>(w));
    if (post < pre / std::numbers::sqrt2) {
      for (std::size_t i = 0; i <= j; ++i) {
        const double c = dot(std::span<const double>(w),
                             std::span<const double>(f.v[i]));
        h[i] += c;
        axpy(-c, f.v[i], w);
      }
      post = norm2(std::span<const double>(w));
    }
    h[j + 1] = post;
    hcols.push_back(std::move(h));
    f.k = j + 1;
    if (post < 1e-14 * std::max(pre, 1.0)) {
      f.breakdown = true;
      f.h_next = 0.0;
      break;
    }
    f.h_next = post;
    if (j + 1 < m) {
      scale(w, 1.0 / post);
      f.v.push_back(std::move(w));
    }
  }
  f.h = DenseMatrix(f.k);
  for (std::size_t j = 0; j < f.k; ++j)
    for (std::size_t i = 0; i < std::min(f.k, j + 2); ++i)
      f.h.at(i, j) = hcols[j][i];
  return f;
}

}  // namespace detail

/// Arnoldi eigensolver on the energy-dependent operator
/// v -> (I - TMS)^-1 TMF v (each application is one multigroup solve). The
/// subspace is filled, the dominant Ritz pair extracted, and the method
/// explicitly restarts from the Ritz vector until the k change and the Ritz
/// residual are within tolerance. The energy-independent form runs the same
/// machinery on per-cell vectors with a final fixed-source solve to recover
/// the flux.
inline EigenReport solve_arnoldi(const ProblemModel& m, const Quadrature& quad,
                                 Scheme scheme, const EigenConfig& cfg) {
  require(m.fissile(), "Arnoldi requires a fissile problem");
  detail::Timer timer;
  const auto precond = detail::make_preconditioner(m, quad, scheme, cfg);
  const std::size_t nc = m.n_cells();
  const std::size_t G = m.groups();

  EigenReport rep;
  bool inner_ok = true;

  auto mg_solve = [&](const FluxVector& b) {
    const MultigroupResult mg = solve_multigroup(m, quad, scheme, b,
                                                 cfg.multigroup, nullptr,
                                                 precond.get());
    rep.cumulative_krylov_iterations += mg.krylov_iterations;
    inner_ok = inner_ok && mg.converged;
    return mg.flux;
  };

  const bool energy_dep = !cfg.arnoldi_energy_independent;
  const std::size_t dim = energy_dep ? G * nc : nc;
  const std::size_t msub =
      std::min<std::size_t>(std::max(cfg.arnoldi_subspace, 1), dim);

  auto op = [&](const std::vector<double>& vin) {
    if (energy_dep) {
      FluxVector v(G, nc);
      v.v = vin;
      const FluxVector z = apply_TM(m, quad, scheme, apply_fission(m, v));
      return mg_solve(z).v;
    }
    // energy-independent: z = TM chi Gamma, solve, then f^T x
    FluxVector zsrc(G, nc);
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& xs = m.mat(c);
      for (std::size_t g = 0; g < G; ++g)
        zsrc.at(g, c) = xs.chi[g] * vin[c];
    }
    const FluxVector x = mg_solve(apply_TM(m, quad, scheme, zsrc));
    return detail::fission_production(m, x);
  };

  std::vector<double> v0(dim, 1.0 / std::sqrt(double(dim)));
  double k = 0.0, k_prev = 0.0;
  bool have_prev = false;
  std::vector<double> ritz(dim, 0.0);
  double ritz_res = 1.0;

  for (long r = 0; r < cfg.max_outer_iterations; ++r) {
    const auto fill = detail::arnoldi_fill(op, v0, msub);
    const EigPair ritz_small = dominant_ritz(fill.h);
    k = ritz_small.value;

    std::vector<double> x(dim, 0.0);
    for (std::size_t j = 0; j < fill.k; ++j)
      axpy(ritz_small.vector[j], fill.v[j], x);
    const double nx = norm2(std::span<const double>(x));
    require(nx > 0.0, "Arnoldi produced a zero Ritz vector");
    scale(x, 1.0 / nx);
    ritz = x;

    // ||A x - k x|| = |h_{m+1,m}| |e_m^T y| for a unit Ritz vector
    ritz_res = fill.breakdown
                   ? 0.0
                   : std::abs(fill.h_next * ritz_small.vector[fill.k - 1]) /
                         (std::abs(k) * nx);
    rep.outer_iterations = r + 1;
    rep.history.push_back(
        {k, have_prev ? std::abs(k - k_prev) / std::abs(k) : 1.0});

    const bool k_ok =
        have_prev && std::abs(k - k_prev) / std::abs(k) <= cfg.k_tolerance;
    if ((k_ok && ritz_res <= cfg.flux_tolerance) ||
        (fill.breakdown && ritz_res <= cfg.flux_tolerance)) {
      rep.converged = inner_ok;
      k_prev = k;
      break;
    }
    k_prev = k;
    have_prev = true;
    v0 = x;
  }

  rep.k = k;
  rep.gamma = 1.0 / k;
  if (energy_dep) {
    rep.flux = FluxVector(G, nc);
    rep.flux.v = ritz;
  } else {
    // recover flux moments: (I - TMS) phi = (1/k) TM chi Gamma
    FluxVector zsrc(G, nc);
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& xs = m.mat(c);
      for (std::size_t g = 0; g < G; ++g)
        zsrc.at(g, c) = xs.chi[g] * ritz[c] / k;
    }
    rep.flux = mg_solve(apply_TM(m, quad, scheme, zsrc));
    rep.converged = rep.converged && inner_ok;
  }
  detail::normalize_unit(rep.flux);
  if (!rep.converged && rep.message.empty())
    rep.message = "Arnoldi hit the restart cap";
  rep.seconds = timer.seconds();
  return rep;
}

/// Dispatch on the configured eigensolver.
inline EigenReport solve_eigen(const ProblemModel& m, const Quadrature& quad,
                               Scheme scheme, const EigenConfig& cfg) {
  switch (cfg.solver) {
    case EigenSolverKind::power: return solve_power(m, quad, scheme, cfg);
    case EigenSolverKind::rqi: return solve_rqi(m, quad, scheme, cfg);
    case EigenSolverKind::arnoldi: return solve_arnoldi(m, quad, scheme, cfg);
  }
  fail("unknown eigensolver");
}

}  // namespace snkit
