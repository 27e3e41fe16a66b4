#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "snkit/core.hpp"

namespace snkit {

/// Multigroup cross-section data for one material.
///
/// The scattering matrix is stored row-wise with scat[g][g'] the transfer
/// INTO group g FROM group g'. Group 0 is the highest energy.
struct CrossSectionSet {
  std::size_t group_count = 0;
  std::vector<double> sigma_t;              // [1/cm], per group
  std::vector<std::vector<double>> scat;    // [1/cm], scat[g][g']
  std::vector<double> nu_sigma_f;           // [1/cm], per group
  std::vector<double> chi;                  // fission spectrum, per group

  double scatter(std::size_t into_g, std::size_t from_g) const {
    return scat[into_g][from_g];
  }

  bool fissile() const {
    for (double f : nu_sigma_f)
      if (f > 0.0) return true;
    return false;
  }
};

/// Uniform-value helper used by tests and the builtin problem library.
inline CrossSectionSet make_xs(std::size_t groups,
                               std::vector<double> sigma_t,
                               std::vector<std::vector<double>> scat,
                               std::vector<double> nu_sigma_f,
                               std::vector<double> chi) {
  CrossSectionSet xs;
  xs.group_count = groups;
  xs.sigma_t = std::move(sigma_t);
  xs.scat = std::move(scat);
  xs.nu_sigma_f = std::move(nu_sigma_f);
  xs.chi = std::move(chi);
  return xs;
}

/// One-group convenience constructor.
inline CrossSectionSet make_xs_1g(double sigma_t, double sigma_s,
                                  double nu_sigma_f) {
  return make_xs(1, {sigma_t}, {{sigma_s}}, {nu_sigma_f},
                 {nu_sigma_f > 0.0 ? 1.0 : 0.0});
}

/// Index of the first group that receives scattering from a lower-energy
/// (higher-index) group, scanned over all given materials. Groups from that
/// index to G-1 form the upscatter block. Returns G when no upscatter exists.
inline std::size_t first_upscatter_group(
    const std::vector<CrossSectionSet>& materials) {
  if (materials.empty()) return 0;
  const std::size_t G = materials.front().group_count;
  std::size_t first = G;
  for (const auto& m : materials)
    for (std::size_t g = 0; g < G; ++g)
      for (std::size_t gp = g + 1; gp < G; ++gp)
        if (m.scat[g][gp] > 0.0) first = std::min(first, g);
  return first;
}

/// True if any material couples group g through fission (as emitter or
/// as producer). Used to reject shifted solves whose Krylov block does not
/// cover the fission coupling.
inline bool fission_couples_group(const std::vector<CrossSectionSet>& materials,
                                  std::size_t g) {
  for (const auto& m : materials)
    if (m.chi[g] > 0.0 || m.nu_sigma_f[g] > 0.0) return true;
  return false;
}

}  // namespace snkit
