#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "snkit/core.hpp"

namespace snkit {

/// Multigroup scalar-flux moments (P0: one moment per group-cell), stored
/// group-major: group g's cells are contiguous at [g * cells, (g+1) * cells).
struct FluxVector {
  std::size_t groups = 0;
  std::size_t cells = 0;
  std::vector<double> v;

  FluxVector() = default;
  FluxVector(std::size_t g, std::size_t c, double fill = 0.0)
      : groups(g), cells(c), v(g * c, fill) {}

  std::size_t size() const { return v.size(); }
  double& at(std::size_t g, std::size_t c) { return v[g * cells + c]; }
  double at(std::size_t g, std::size_t c) const { return v[g * cells + c]; }
  std::span<double> group(std::size_t g) {
    return {v.data() + g * cells, cells};
  }
  std::span<const double> group(std::size_t g) const {
    return {v.data() + g * cells, cells};
  }

  FluxVector zeros_like() const { return FluxVector(groups, cells); }
};

inline double dot(const FluxVector& a, const FluxVector& b) {
  return dot(std::span<const double>(a.v), std::span<const double>(b.v));
}

inline double norm2(const FluxVector& a) {
  return norm2(std::span<const double>(a.v));
}

inline double rel_l2_diff(const FluxVector& a, const FluxVector& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const double d = a.v[i] - b.v[i];
    num += d * d;
    den += b.v[i] * b.v[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace snkit
