#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "snkit/core.hpp"

namespace snkit {

struct KrylovConfig {
  int restart = 50;            // GMRES(m) subspace size
  double tolerance = 1e-8;     // relative residual target vs ||b||
  long max_iterations = 1000;  // total inner-iteration cap
};

struct KrylovStats {
  long iterations = 0;
  bool converged = false;
  double final_relative_residual = 0.0;
  long restarts = 0;
  // per-iteration relative residual estimates, and the history index at
  // which each restart cycle begins (for monotonicity checks)
  std::vector<double> residual_history;
  std::vector<std::size_t> cycle_starts;
};

namespace detail {

struct IdentityPrecond {
  void operator()(const std::vector<double>& in, std::vector<double>& out) const {
    out = in;
  }
};

}  // namespace detail

/// Restarted GMRES(m) on a matrix-free linear operator.
///
/// `apply(in, out)` computes out = A in; `precond(in, out)` applies a right
/// preconditioner G^-1 (the solve runs on A G^-1 and the update is mapped
/// back through G^-1, so the residual norm is the true one). The Arnoldi
/// process uses modified Gram-Schmidt with one re-orthogonalization pass
/// whenever the post-MGS norm drops below 1/sqrt(2) of the pre-MGS norm; the
/// Hessenberg least-squares problem is solved with Givens rotations. The
/// true residual is recomputed at every restart and makes the convergence
/// decision.
template <class ApplyFn, class PrecondFn>
std::vector<double> gmres(ApplyFn&& apply, const std::vector<double>& b,
                          std::vector<double> x0, const KrylovConfig& cfg,
                          PrecondFn&& precond, bool use_precond,
                          KrylovStats& stats) {
  require(cfg.restart >= 1, "GMRES restart must be >= 1");
  require(cfg.tolerance > 0.0, "GMRES tolerance must be positive");
  const std::size_t n = b.size();
  stats = KrylovStats{};

  const double norm_b = norm2(b);
  if (norm_b == 0.0) {
    stats.converged = true;
    return std::vector<double>(n, 0.0);
  }

  std::vector<double> x = x0.empty() ? std::vector<double>(n, 0.0)
                                     : std::move(x0);
  require(x.size() == n, "initial guess size mismatch");

  const int m = cfg.restart;
  std::vector<std::vector<double>> V;
  std::vector<std::vector<double>> H;  // H[j]: column j, length j+2
  std::vector<double> cs(m), sn(m), g(m + 1);
  std::vector<double> r(n), w(n), z(n);

  // stagnation guard: restarts that stop improving the true residual mean
  // the target sits below the attainable floor (ill-conditioned systems)
  double best_res = std::numeric_limits<double>::infinity();
  std::vector<double> best_x;
  int stalled_restarts = 0;

  while (true) {
    // true (unpreconditioned) residual
    apply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    const double beta = norm2(r);
    stats.final_relative_residual = beta / norm_b;
    if (stats.final_relative_residual <= cfg.tolerance) {
      stats.converged = true;
      return x;
    }
    if (beta < 0.99 * best_res) {
      best_res = beta;
      best_x = x;
      stalled_restarts = 0;
    } else if (++stalled_restarts >= 3) {
      stats.final_relative_residual = best_res / norm_b;
      return best_x;
    }
    if (stats.iterations >= cfg.max_iterations) {
      if (best_res < beta) {
        stats.final_relative_residual = best_res / norm_b;
        return best_x;
      }
      return x;
    }

    stats.restarts += (stats.iterations > 0);
    stats.cycle_starts.push_back(stats.residual_history.size());

    V.assign(1, r);
    scale(V[0], 1.0 / beta);
    H.clear();
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    int k = 0;  // Arnoldi steps completed this cycle
    bool breakdown = false;
    for (int j = 0; j < m; ++j) {
      if (use_precond) {
        precond(V[j], z);
        apply(z, w);
      } else {
        apply(V[j], w);
      }
      ++stats.iterations;

      const double pre_norm = norm2(w);
      std::vector<double> h(j + 2, 0.0);
      for (int i = 0; i <= j; ++i) {
        h[i] = dot(w, V[i]);
        axpy(-h[i], V[i], w);
      }
      double post_norm = norm2(w);
      if (post_norm < pre_norm / std::numbers::sqrt2) {
        for (int i = 0; i <= j; ++i) {
          const double c = dot(w, V[i]);
          h[i] += c;
          axpy(-c, V[i], w);
        }
        post_norm = norm2(w);
      }
      h[j + 1] = post_norm;

      // previous rotations, then a new one to annihilate h[j+1]
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h[i] + sn[i] * h[i + 1];
        h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
        h[i] = t;
      }
      const double denom = std::hypot(h[j], h[j + 1]);
      cs[j] = denom == 0.0 ? 1.0 : h[j] / denom;
      sn[j] = denom == 0.0 ? 0.0 : h[j + 1] / denom;
      h[j] = denom;
      const double gj = g[j];
      g[j] = cs[j] * gj;
      g[j + 1] = -sn[j] * gj;
      H.push_back(std::move(h));
      k = j + 1;

      const double est = std::abs(g[j + 1]) / norm_b;
      stats.residual_history.push_back(est);

      if (post_norm < 1e-14 * beta) {
        // invariant subspace: the least-squares solution is exact
        breakdown = true;
        break;
      }
      if (est <= cfg.tolerance || stats.iterations >= cfg.max_iterations)
        break;
      V.push_back(w);
      scale(V.back(), 1.0 / post_norm);
    }
    (void)breakdown;

    // back-substitute the triangularized Hessenberg system
    std::vector<double> y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int l = i + 1; l < k; ++l) s -= H[l][i] * y[l];
      y[i] = H[i][i] != 0.0 ? s / H[i][i] : 0.0;
    }
    std::vector<double> u(n, 0.0);
    for (int l = 0; l < k; ++l) axpy(y[l], V[l], u);
    if (use_precond) {
      precond(u, z);
      u = z;
    }
    for (std::size_t i = 0; i < n; ++i) x[i] += u[i];
  }
}

template <class ApplyFn, class PrecondFn>
std::vector<double> gmres(ApplyFn&& apply, const std::vector<double>& b,
                          std::vector<double> x0, const KrylovConfig& cfg,
                          PrecondFn&& precond, KrylovStats& stats) {
  return gmres(apply, b, std::move(x0), cfg, precond, true, stats);
}

template <class ApplyFn>
std::vector<double> gmres(ApplyFn&& apply, const std::vector<double>& b,
                          std::vector<double> x0, const KrylovConfig& cfg,
                          KrylovStats& stats) {
  detail::IdentityPrecond id;
  return gmres(apply, b, std::move(x0), cfg, id, false, stats);
}

}  // namespace snkit
