#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "snkit/core.hpp"

namespace snkit {

/// Explicit row-major matrix for brute-force verification. Capped at
/// dimension 2000 to catch accidental probes of large operators.
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t dim) : n(dim), a(dim * dim, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }

  static DenseMatrix identity(std::size_t dim) {
    DenseMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m.at(i, i) = 1.0;
    return m;
  }

  std::vector<double> matvec(const std::vector<double>& x) const {
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += at(i, j) * x[j];
      y[i] = acc;
    }
    return y;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Assembles the matrix of a linear map by applying it to every canonical
/// basis vector: column j = apply(e_j).
template <class ApplyFn>
DenseMatrix probe_operator(ApplyFn&& apply, std::size_t d) {
  require(d <= 2000, "probe_operator dimension guard: d = " +
                         std::to_string(d) + " exceeds 2000");
  DenseMatrix out(d);
  std::vector<double> e(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    e[j] = 1.0;
    const std::vector<double> col = apply(e);
    e[j] = 0.0;
    require(col.size() == d, "probed operator changed vector length");
    for (std::size_t i = 0; i < d; ++i) out.at(i, j) = col[i];
  }
  return out;
}

struct LuFactors {
  std::size_t n = 0;
  std::vector<double> lu;
  std::vector<std::size_t> piv;
};

/// Partial-pivot LU factorization. Throws on pivots below 1e-14 * max|A|.
inline LuFactors lu_factor(const DenseMatrix& A) {
  const std::size_t n = A.n;
  LuFactors f;
  f.n = n;
  f.lu = A.a;
  f.piv.resize(n);
  const double tiny = 1e-14 * A.max_abs();
  auto lu = [&](std::size_t i, std::size_t j) -> double& {
    return f.lu[i * n + j];
  };
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
    if (std::abs(lu(p, k)) <= tiny)
      fail("singular matrix in dense solve (pivot " +
           std::to_string(std::abs(lu(p, k))) + " at column " +
           std::to_string(k) + ")");
    f.piv[k] = p;
    if (p != k)
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
    for (std::size_t i = k + 1; i < n; ++i) {
      lu(i, k) /= lu(k, k);
      const double lik = lu(i, k);
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= lik * lu(k, j);
    }
  }
  return f;
}

inline std::vector<double> lu_solve(const LuFactors& f,
                                    std::vector<double> b) {
  const std::size_t n = f.n;
  for (std::size_t k = 0; k < n; ++k) {
    std::swap(b[k], b[f.piv[k]]);
    for (std::size_t i = k + 1; i < n; ++i) b[i] -= f.lu[i * n + k] * b[k];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) b[i] -= f.lu[i * n + j] * b[j];
    b[i] /= f.lu[i * n + i];
  }
  return b;
}

/// Gaussian elimination with partial pivoting; the residual is checked to
/// 1e-10 relative before returning.
inline std::vector<double> dense_solve(const DenseMatrix& A,
                                       const std::vector<double>& b) {
  require(A.n == b.size(), "dense_solve shape mismatch");
  const auto x = lu_solve(lu_factor(A), b);
  const auto ax = A.matvec(x);
  double rn = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double d = ax[i] - b[i];
    rn += d * d;
  }
  const double bn = norm2(b);
  if (bn > 0.0)
    require(std::sqrt(rn) / bn <= 1e-10,
            "dense solve residual exceeds 1e-10: matrix too ill-conditioned "
            "for the oracle");
  return x;
}

struct EigPair {
  double value = 0.0;
  std::vector<double> vector;
};

/// Dominant eigenpair by power iteration with Rayleigh-quotient polishing.
/// Without B: iterates x <- A x. With B: iterates x <- A^-1 B x, so for the
/// transport pairing (I - TMS, TMF) the returned value is k directly.
/// Period-2 oscillation of the value estimate is reported as complex
/// dominance.
inline EigPair dense_dominant_eig(const DenseMatrix& A,
                                  const DenseMatrix* B = nullptr) {
  const std::size_t n = A.n;
  require(n >= 1, "empty matrix");
  LuFactors f;
  if (B) {
    require(B->n == n, "generalized pair shape mismatch");
    f = lu_factor(A);
  }

  std::vector<double> x(n, 1.0 / std::sqrt(double(n)));
  std::vector<double> x_prev;
  double lambda = 0.0;
  double lam_prev = 0.0;
  int oscillating = 0;
  const long max_steps = 100000;
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
    std::vector<double> y = B ? lu_solve(f, B->matvec(x)) : A.matvec(x);
    const double ny = norm2(y);
    require(ny > 0.0, "power iteration hit the zero vector");
    // signed estimate so a negative dominant eigenvalue converges too
    const double lam_new = dot(std::span<const double>(y),
                               std::span<const double>(x));
    scale(y, 1.0 / ny);

    const double dir_delta = sign_aligned_delta(y, x);
    // a vector returning to where it was two steps ago while still moving
    // each step is the period-2 signature of a tied or complex pair
    if (!x_prev.empty()) {
      const double period2 = sign_aligned_delta(y, x_prev);
      oscillating =
          (period2 < 1e-10 && dir_delta > 1e-6) ? oscillating + 1 : 0;
      if (oscillating > 200)
        fail("power iteration oscillates with period 2: dominant eigenvalue "
             "appears complex or tied");
    }
    x_prev = x;
    x = std::move(y);
    lambda = lam_new;
    if (s >= 2 && rel_diff(lam_new, lam_prev) <= 1e-12 && dir_delta <= 1e-11)
      break;
    lam_prev = lam_new;
    if (s == max_steps)
      fail("power iteration did not converge in " +
           std::to_string(max_steps) + " steps");
  }

  // Rayleigh-quotient polish on the iterated operator
  if (B) {
    const auto ax = A.matvec(x);
    const auto bx = B->matvec(x);
    const double den = dot(std::span<const double>(x),
                           std::span<const double>(ax));
    require(std::abs(den) > 0.0, "degenerate Rayleigh quotient");
    lambda = dot(std::span<const double>(x), std::span<const double>(bx)) /
             den;
  } else {
    const auto ax = A.matvec(x);
    lambda = dot(std::span<const double>(x), std::span<const double>(ax)) /
             dot(std::span<const double>(x), std::span<const double>(x));
  }

  // orient the vector so its largest entry is positive
  double big = 0.0;
  for (double v : x)
    if (std::abs(v) > std::abs(big)) big = v;
  if (big < 0.0)
    for (double& v : x) v = -v;
  return {lambda, x};
}

}  // namespace snkit
