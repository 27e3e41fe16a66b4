#pragma once

#include <cstddef>
#include <vector>

#include "snkit/core.hpp"
#include "snkit/flux.hpp"
#include "snkit/model.hpp"
#include "snkit/quadrature.hpp"
#include "snkit/sweep.hpp"

namespace snkit {

/// Half-open group range [begin, end).
struct GroupRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t count() const { return end - begin; }
  bool contains(std::size_t g) const { return g >= begin && g < end; }
  static GroupRange all(const ProblemModel& m) { return {0, m.groups()}; }
};

/// Shift spec for the RQI system: S~ = S + rho * F (rho in units of 1/k).
struct ShiftedOperatorSpec {
  double rho = 0.0;
};

/// out[g][c] = sum_{g' in in_range} scat_c[g][g'] phi[g'][c] for g in
/// out_range; other groups stay zero. Accumulation runs ascending in g' so
/// the result is independent of any work partitioning.
inline FluxVector apply_scatter(const ProblemModel& m, const FluxVector& phi,
                                GroupRange in_range, GroupRange out_range) {
  const std::size_t nc = m.n_cells();
  FluxVector out(phi.groups, nc);
  for (std::size_t g = out_range.begin; g < out_range.end; ++g)
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& xs = m.mat(c);
      double acc = 0.0;
      for (std::size_t gp = in_range.begin; gp < in_range.end; ++gp)
        acc += xs.scat[g][gp] * phi.at(gp, c);
      out.at(g, c) = acc;
    }
  return out;
}

inline FluxVector apply_scatter(const ProblemModel& m, const FluxVector& phi,
                                GroupRange range) {
  return apply_scatter(m, phi, range, range);
}

/// F phi with F = chi f^T: out[g][c] = chi_c[g] * sum_g' nu_sigma_f_c[g']
/// phi[g'][c]. The optional range restricts both the production sum and the
/// emission rows (used by shifted block operators).
inline FluxVector apply_fission(const ProblemModel& m, const FluxVector& phi,
                                GroupRange range) {
  const std::size_t nc = m.n_cells();
  FluxVector out(phi.groups, nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& xs = m.mat(c);
    double prod = 0.0;
    for (std::size_t gp = range.begin; gp < range.end; ++gp)
      prod += xs.nu_sigma_f[gp] * phi.at(gp, c);
    for (std::size_t g = range.begin; g < range.end; ++g)
      out.at(g, c) = xs.chi[g] * prod;
  }
  return out;
}

inline FluxVector apply_fission(const ProblemModel& m, const FluxVector& phi) {
  return apply_fission(m, phi, GroupRange::all(m));
}

/// T M applied to P0 source moments for the groups in `range`: M broadcasts
/// the moments isotropically (identity under the weight normalization), the
/// sweep applies L^-1, and D contracts angles with the quadrature weights.
inline FluxVector apply_TM(const ProblemModel& m, const Quadrature& quad,
                           Scheme scheme, const FluxVector& moments,
                           GroupRange range) {
  const std::size_t nc = m.n_cells();
  FluxVector out(moments.groups, nc);
  for (std::size_t g = range.begin; g < range.end; ++g) {
    const auto psi = sweep_group_isotropic(m, quad, g, moments.group(g), scheme);
    for (std::size_t c = 0; c < nc; ++c) {
      double acc = 0.0;
      for (std::size_t a = 0; a < quad.size(); ++a)
        acc += quad.weight[a] * psi.cell(a, c);
      out.at(g, c) = acc;
    }
  }
  return out;
}

inline FluxVector apply_TM(const ProblemModel& m, const Quadrature& quad,
                           Scheme scheme, const FluxVector& moments) {
  return apply_TM(m, quad, scheme, moments, GroupRange::all(m));
}

namespace detail {

// Scattering-plus-shifted-fission source rows [row_begin, row_end), columns
// over the whole block. This is one set's additive contribution to the block
// matvec; each row is summed ascending in g' regardless of the set layout,
// so the same bits come out for any set count. Vectors are full-length
// group-major arrays of n_cells * groups entries.
inline void block_source_rows(const ProblemModel& m,
                              std::span<const double> phi, GroupRange block,
                              double rho, std::size_t row_begin,
                              std::size_t row_end, std::span<double> out) {
  const std::size_t nc = m.n_cells();
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& xs = m.mat(c);
    double prod = 0.0;
    if (rho != 0.0)
      for (std::size_t gp = block.begin; gp < block.end; ++gp)
        prod += xs.nu_sigma_f[gp] * phi[gp * nc + c];
    for (std::size_t g = row_begin; g < row_end; ++g) {
      double acc = 0.0;
      for (std::size_t gp = block.begin; gp < block.end; ++gp)
        acc += xs.scat[g][gp] * phi[gp * nc + c];
      if (rho != 0.0) acc += rho * xs.chi[g] * prod;
      out[g * nc + c] = acc;
    }
  }
}

// out[g] = TM(src[g]) for rows [row_begin, row_end).
inline void block_tm_rows(const ProblemModel& m, const Quadrature& quad,
                          Scheme scheme, std::span<const double> src,
                          std::size_t row_begin, std::size_t row_end,
                          std::span<double> out) {
  const std::size_t nc = m.n_cells();
  for (std::size_t g = row_begin; g < row_end; ++g) {
    const auto psi =
        sweep_group_isotropic(m, quad, g, src.subspan(g * nc, nc), scheme);
    for (std::size_t c = 0; c < nc; ++c) {
      double acc = 0.0;
      for (std::size_t a = 0; a < quad.size(); ++a)
        acc += quad.weight[a] * psi.cell(a, c);
      out[g * nc + c] = acc;
    }
  }
}

// out[g] = in[g] - TM(src[g]) for rows [row_begin, row_end).
inline void block_sweep_rows(const ProblemModel& m, const Quadrature& quad,
                             Scheme scheme, std::span<const double> in,
                             std::span<const double> src,
                             std::size_t row_begin, std::size_t row_end,
                             std::span<double> out) {
  const std::size_t nc = m.n_cells();
  for (std::size_t g = row_begin; g < row_end; ++g) {
    const auto psi =
        sweep_group_isotropic(m, quad, g, src.subspan(g * nc, nc), scheme);
    for (std::size_t c = 0; c < nc; ++c) {
      double acc = 0.0;
      for (std::size_t a = 0; a < quad.size(); ++a)
        acc += quad.weight[a] * psi.cell(a, c);
      out[g * nc + c] = in[g * nc + c] - acc;
    }
  }
}

}  // namespace detail

/// The fixed-source operator over a group block:
///   phi - TM (S + rho F) phi   restricted to `block`.
/// rho = 0 recovers I - TMS; groups outside the block pass through as zero.
inline FluxVector apply_A(const ProblemModel& m, const Quadrature& quad,
                          Scheme scheme, const FluxVector& phi,
                          GroupRange block, double rho = 0.0) {
  FluxVector src(phi.groups, phi.cells);
  detail::block_source_rows(m, phi.v, block, rho, block.begin, block.end,
                            src.v);
  FluxVector out(phi.groups, phi.cells);
  detail::block_sweep_rows(m, quad, scheme, phi.v, src.v, block.begin,
                           block.end, out.v);
  return out;
}

inline FluxVector apply_A(const ProblemModel& m, const Quadrature& quad,
                          Scheme scheme, const FluxVector& phi,
                          const ShiftedOperatorSpec* shift = nullptr) {
  return apply_A(m, quad, scheme, phi, GroupRange::all(m),
                 shift ? shift->rho : 0.0);
}

/// Rayleigh quotient for the generalized pair (I - TMS, TMF) with the plain
/// Euclidean inner product; at an eigenpair it equals gamma = 1/k.
inline double rayleigh_quotient(const ProblemModel& m, const Quadrature& quad,
                                Scheme scheme, const FluxVector& phi) {
  const FluxVector a_phi = apply_A(m, quad, scheme, phi);
  const FluxVector b_phi =
      apply_TM(m, quad, scheme, apply_fission(m, phi));
  const double num = dot(phi, a_phi);
  const double den = dot(phi, b_phi);
  require(std::abs(den) >= 1e-300,
          "rayleigh quotient undefined: no fissile mode in the iterate");
  return num / den;
}

}  // namespace snkit
