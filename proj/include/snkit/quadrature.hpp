#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "snkit/core.hpp"

namespace snkit {

/// Discrete-ordinates direction set.
///
/// 1D directions are cosines mu (eta stays 0); 2D directions are (mu, eta)
/// pairs. Weights are normalized to sum to 1, which makes the P0
/// discrete-to-moment contraction a plain weighted average and the
/// moment-to-discrete map the identity broadcast.
struct Quadrature {
  int dimension = 1;
  std::vector<double> mu;
  std::vector<double> eta;      // all zero in 1D
  std::vector<double> weight;

  std::size_t size() const { return mu.size(); }

  // Index of the direction with mu negated (eta preserved), used by
  // reflecting x-faces. Directions are generated by sign-flipping a positive
  // template, so the mirror match is exact.
  std::size_t mirror_x(std::size_t a) const { return mirror_x_[a]; }
  std::size_t mirror_y(std::size_t a) const { return mirror_y_[a]; }

  void build_mirrors() {
    const std::size_t n = size();
    mirror_x_.assign(n, n);
    mirror_y_.assign(n, n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (mu[b] == -mu[a] && eta[b] == eta[a]) mirror_x_[a] = b;
        if (mu[b] == mu[a] && eta[b] == -eta[a]) mirror_y_[a] = b;
      }
      require(mirror_x_[a] < n, "quadrature is not symmetric under mu -> -mu");
      if (dimension == 2)
        require(mirror_y_[a] < n,
                "quadrature is not symmetric under eta -> -eta");
    }
  }

 private:
  std::vector<std::size_t> mirror_x_;
  std::vector<std::size_t> mirror_y_;
};

namespace detail {

// Legendre polynomial value and derivative at x, by upward recurrence.
inline std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

// Gauss-Legendre nodes and weights on [-1, 1], standard normalization
// (weights sum to 2). Newton iteration from the Chebyshev initial guess.
inline void gauss_legendre(int n, std::vector<double>& x,
                           std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, z);
      const double dz = p / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    const auto [p, dp] = legendre(n, z);
    (void)p;
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

// Level-symmetric (LQn) first direction cosine per supported order. The
// remaining levels follow from mu_i^2 = mu_1^2 + (i-1) * 2(1-3 mu_1^2)/(N-2).
inline double level_symmetric_mu1(int n) {
  switch (n) {
    case 2: return 0.577350269189625764509;  // sqrt(1/3)
    case 4: return 0.3500212;
    case 8: return 0.2182179;
    default: fail("unsupported 2D quadrature order N=" + std::to_string(n) +
                  "; supported: 2, 4, 8");
  }
}

struct OctantPoint {
  int ix, iy;   // mu levels for the in-plane components
  double w;     // weight, octant-normalized
};

// (i, j, k) level triples with i+j+k = N/2 + 2, projected to 2D by dropping
// the polar component. Weights from the classic LQn tables.
inline std::vector<OctantPoint> level_symmetric_octant(int n) {
  switch (n) {
    case 2:
      return {{1, 1, 1.0}};
    case 4:
      // permutations of (1,1,2), all equal weight
      return {{1, 1, 1.0 / 3.0}, {1, 2, 1.0 / 3.0}, {2, 1, 1.0 / 3.0}};
    case 8: {
      const double w1 = 0.1209877, w2 = 0.0907407, w3 = 0.0925926;
      return {{1, 1, w1}, {1, 4, w1}, {4, 1, w1},
              {1, 2, w2}, {2, 1, w2}, {1, 3, w2},
              {3, 1, w2}, {2, 3, w2}, {3, 2, w2},
              {2, 2, w3}};
    }
    default:
      fail("unsupported 2D quadrature order N=" + std::to_string(n) +
           "; supported: 2, 4, 8");
  }
}

}  // namespace detail

/// Builds the angular quadrature: Gauss-Legendre with N points in 1D,
/// level-symmetric in 2D (N in {2, 4, 8}). Weights renormalized to sum to 1.
inline Quadrature build_quadrature(int dimension, int n) {
  require(dimension == 1 || dimension == 2, "dimension must be 1 or 2");
  require(n >= 2 && n % 2 == 0,
          "quadrature order must be even and >= 2, got " + std::to_string(n));

  Quadrature q;
  q.dimension = dimension;
  if (dimension == 1) {
    std::vector<double> x, w;
    detail::gauss_legendre(n, x, w);
    q.mu = x;
    q.eta.assign(x.size(), 0.0);
    q.weight = w;
  } else {
    const auto octant = detail::level_symmetric_octant(n);
    const double mu1 = detail::level_symmetric_mu1(n);
    const double mu1sq = mu1 * mu1;
    const double delta = n > 2 ? 2.0 * (1.0 - 3.0 * mu1sq) / (n - 2) : 0.0;
    auto level = [&](int i) { return std::sqrt(mu1sq + (i - 1) * delta); };
    // one quadrant pattern, replicated by sign flips so mirrors are exact
    for (int sy : {1, -1}) {
      for (int sx : {1, -1}) {
        for (const auto& p : octant) {
          q.mu.push_back(sx * level(p.ix));
          q.eta.push_back(sy * level(p.iy));
          q.weight.push_back(p.w);
        }
      }
    }
  }

  double sum = 0.0;
  for (double w : q.weight) sum += w;
  for (double& w : q.weight) w /= sum;
  q.build_mirrors();
  return q;
}

}  // namespace snkit
