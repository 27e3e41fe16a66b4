#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "snkit/core.hpp"
#include "snkit/model.hpp"
#include "snkit/quadrature.hpp"

namespace snkit {

enum class Scheme { step_characteristic, step, diamond };

inline Scheme default_scheme(const ProblemModel& m) {
  return m.dimension == 1 ? Scheme::step_characteristic : Scheme::step;
}

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::step_characteristic: return "step_characteristic";
    case Scheme::step: return "step";
    case Scheme::diamond: return "diamond";
  }
  return "?";
}

/// Per-group, per-angle, per-cell emission density [n/cm^3 s].
struct AngularSource {
  std::size_t groups = 0, angles = 0, cells = 0;
  std::vector<double> q;

  AngularSource() = default;
  AngularSource(std::size_t g, std::size_t a, std::size_t c)
      : groups(g), angles(a), cells(c), q(g * a * c, 0.0) {}

  double& at(std::size_t g, std::size_t a, std::size_t c) {
    return q[(g * angles + a) * cells + c];
  }
  double at(std::size_t g, std::size_t a, std::size_t c) const {
    return q[(g * angles + a) * cells + c];
  }
};

/// Angular flux for one group: cell averages plus every face value, so
/// balance checks and reflecting-boundary bookkeeping need no re-sweep.
struct GroupAngularFlux {
  std::size_t angles = 0, nx = 0, ny = 0;
  std::vector<double> psi;     // [a][j*nx + i], cell averages
  std::vector<double> face_x;  // [a][j*(nx+1) + i], flux on x-face i of row j
  std::vector<double> face_y;  // [a][j*nx + i], flux on y-face j of column i
                               // (j = 0..ny; empty in 1D)
  int fixed_point_passes = 0;

  double& cell(std::size_t a, std::size_t c) { return psi[a * nx * ny + c]; }
  double cell(std::size_t a, std::size_t c) const {
    return psi[a * nx * ny + c];
  }
  double& fx(std::size_t a, std::size_t j, std::size_t i) {
    return face_x[a * (nx + 1) * ny + j * (nx + 1) + i];
  }
  double fx(std::size_t a, std::size_t j, std::size_t i) const {
    return face_x[a * (nx + 1) * ny + j * (nx + 1) + i];
  }
  double& fy(std::size_t a, std::size_t j, std::size_t i) {
    return face_y[a * nx * (ny + 1) + j * nx + i];
  }
  double fy(std::size_t a, std::size_t j, std::size_t i) const {
    return face_y[a * nx * (ny + 1) + j * nx + i];
  }
};

struct AngularFlux {
  std::vector<GroupAngularFlux> group;
};

namespace detail {

// Step-characteristic cell update factors. With tau = sigma_t dx / |mu|:
//   psi_out = psi_in e^-tau + (Q dx/|mu|) a,   a = (1 - e^-tau)/tau
//   psi_bar = psi_in a     + (Q dx/|mu|) b,    b = (1 - a)/tau
// Both limits at tau -> 0 (a -> 1, b -> 1/2) cover sigma_t = 0 cells.
struct ScFactors {
  double e, a, b;
};

inline ScFactors sc_factors(double tau) {
  if (tau < 1e-300) return {1.0, 1.0, 0.5};
  const double e = std::exp(-tau);
  const double a = -std::expm1(-tau) / tau;
  return {e, a, (1.0 - a) / tau};
}

struct BoundaryStore {
  // inflow angular flux per reflecting face; vacuum faces stay zero
  std::vector<double> xlo, xhi;  // [a][j]
  std::vector<double> ylo, yhi;  // [a][i]
};

}  // namespace detail

namespace detail {

template <class SourceFn>
void sweep_angle_1d(const ProblemModel& m, const Quadrature& quad,
                    std::size_t g, std::size_t a, SourceFn&& src,
                    Scheme scheme, GroupAngularFlux& out,
                    const BoundaryStore& bc) {
  const std::size_t nx = m.nx();
  const double mu = quad.mu[a];
  const double amu = std::abs(mu);
  const bool fwd = mu > 0.0;
  double face = fwd ? (m.bc(Face::xlo) == Bc::reflecting ? bc.xlo[a] : 0.0)
                    : (m.bc(Face::xhi) == Bc::reflecting ? bc.xhi[a] : 0.0);
  for (std::size_t step = 0; step < nx; ++step) {
    const std::size_t i = fwd ? step : nx - 1 - step;
    const double dx = m.cell_widths_x[i];
    const double st = m.mat(i).sigma_t[g];
    const double q = src(a, i);
    const double qs = q * dx / amu;  // slant-path source load
    double avg = 0.0, outflow = 0.0;
    switch (scheme) {
      case Scheme::step_characteristic: {
        const auto f = sc_factors(st * dx / amu);
        outflow = face * f.e + qs * f.a;
        avg = face * f.a + qs * f.b;
        break;
      }
      case Scheme::step:
        avg = (q * dx + amu * face) / (amu + st * dx);
        outflow = avg;
        break;
      case Scheme::diamond:
        avg = (q * dx + 2.0 * amu * face) / (2.0 * amu + st * dx);
        outflow = 2.0 * avg - face;
        break;
    }
    out.fx(a, 0, fwd ? i : i + 1) = face;
    out.cell(a, i) = avg;
    face = outflow;
    out.fx(a, 0, fwd ? i + 1 : i) = face;
  }
}

template <class SourceFn>
void sweep_angle_2d(const ProblemModel& m, const Quadrature& quad,
                    std::size_t g, std::size_t a, SourceFn&& src,
                    Scheme scheme, GroupAngularFlux& out,
                    const BoundaryStore& bc) {
  const std::size_t nx = m.nx(), ny = m.ny();
  const double amu = std::abs(quad.mu[a]);
  const double aeta = std::abs(quad.eta[a]);
  const bool fwd_x = quad.mu[a] > 0.0;
  const bool fwd_y = quad.eta[a] > 0.0;

  // running y-face flux per column, seeded from the y-inflow boundary
  std::vector<double> face_y(nx, 0.0);
  const Face yin = fwd_y ? Face::ylo : Face::yhi;
  if (m.bc(yin) == Bc::reflecting) {
    const auto& store = fwd_y ? bc.ylo : bc.yhi;
    for (std::size_t i = 0; i < nx; ++i) face_y[i] = store[a * nx + i];
  }
  for (std::size_t i = 0; i < nx; ++i)
    out.fy(a, fwd_y ? 0 : ny, i) = face_y[i];

  const Face xin = fwd_x ? Face::xlo : Face::xhi;
  for (std::size_t sj = 0; sj < ny; ++sj) {
    const std::size_t j = fwd_y ? sj : ny - 1 - sj;
    const double dy = m.cell_widths_y[j];
    double face_x = m.bc(xin) == Bc::reflecting
                        ? (fwd_x ? bc.xlo : bc.xhi)[a * ny + j]
                        : 0.0;
    out.fx(a, j, fwd_x ? 0 : nx) = face_x;
    for (std::size_t si = 0; si < nx; ++si) {
      const std::size_t i = fwd_x ? si : nx - 1 - si;
      const std::size_t c = j * nx + i;
      const double dx = m.cell_widths_x[i];
      const double st = m.mat(c).sigma_t[g];
      const double q = src(a, c);
      double avg, out_x, out_y;
      if (scheme == Scheme::step) {
        avg = (q * dx * dy + amu * dy * face_x + aeta * dx * face_y[i]) /
              (amu * dy + aeta * dx + st * dx * dy);
        out_x = out_y = avg;
      } else {  // diamond
        avg = (q * dx * dy + 2.0 * amu * dy * face_x +
               2.0 * aeta * dx * face_y[i]) /
              (2.0 * amu * dy + 2.0 * aeta * dx + st * dx * dy);
        out_x = 2.0 * avg - face_x;
        out_y = 2.0 * avg - face_y[i];
      }
      out.cell(a, c) = avg;
      face_x = out_x;
      face_y[i] = out_y;
      out.fx(a, j, fwd_x ? i + 1 : i) = face_x;
      out.fy(a, fwd_y ? j + 1 : j, i) = out_y;
    }
  }
}

// One full pass over all angles in index order. Reflecting inflow stores are
// updated immediately after each angle so information crosses the domain
// within a pass; `delta` and `mag` track the inflow change for convergence.
template <class SourceFn>
void sweep_pass(const ProblemModel& m, const Quadrature& quad, std::size_t g,
                SourceFn&& src, Scheme scheme, GroupAngularFlux& out,
                BoundaryStore& bc, double& delta, double& mag) {
  const std::size_t nx = m.nx(), ny = m.ny();
  delta = 0.0;
  mag = 0.0;
  auto update = [&](double& slot, double value) {
    delta = std::max(delta, std::abs(value - slot));
    mag = std::max(mag, std::abs(value));
    slot = value;
  };
  for (std::size_t a = 0; a < quad.size(); ++a) {
    if (m.dimension == 1)
      sweep_angle_1d(m, quad, g, a, src, scheme, out, bc);
    else
      sweep_angle_2d(m, quad, g, a, src, scheme, out, bc);

    // reflect this angle's outgoing faces into its mirror's inflow
    const bool fwd_x = quad.mu[a] > 0.0;
    const Face xout = fwd_x ? Face::xhi : Face::xlo;
    if (m.bc(xout) == Bc::reflecting) {
      const std::size_t ma = quad.mirror_x(a);
      auto& store = fwd_x ? bc.xhi : bc.xlo;
      for (std::size_t j = 0; j < ny; ++j)
        update(store[ma * ny + j], out.fx(a, j, fwd_x ? nx : 0));
    }
    if (m.dimension == 2) {
      const bool fwd_y = quad.eta[a] > 0.0;
      const Face yout = fwd_y ? Face::yhi : Face::ylo;
      if (m.bc(yout) == Bc::reflecting) {
        const std::size_t ma = quad.mirror_y(a);
        auto& store = fwd_y ? bc.yhi : bc.ylo;
        for (std::size_t i = 0; i < nx; ++i)
          update(store[ma * nx + i], out.fy(a, fwd_y ? ny : 0, i));
      }
    }
  }
}

template <class SourceFn>
GroupAngularFlux sweep_group_impl(const ProblemModel& m, const Quadrature& quad,
                                  std::size_t g, SourceFn&& src,
                                  Scheme scheme) {
  require(!(scheme == Scheme::step_characteristic && m.dimension != 1),
          "step_characteristic is 1D only");
  const std::size_t nx = m.nx(), ny = m.ny(), na = quad.size();

  GroupAngularFlux out;
  out.angles = na;
  out.nx = nx;
  out.ny = ny;
  out.psi.assign(na * nx * ny, 0.0);
  out.face_x.assign(na * (nx + 1) * ny, 0.0);
  out.face_y.assign(m.dimension == 2 ? na * nx * (ny + 1) : 0, 0.0);

  BoundaryStore bc;
  bc.xlo.assign(na * ny, 0.0);
  bc.xhi.assign(na * ny, 0.0);
  if (m.dimension == 2) {
    bc.ylo.assign(na * nx, 0.0);
    bc.yhi.assign(na * nx, 0.0);
  }

  if (!m.any_reflecting()) {
    double d, mg;
    sweep_pass(m, quad, g, src, scheme, out, bc, d, mg);
    out.fixed_point_passes = 1;
    return out;
  }

  const int max_passes = 200;
  const double tol = 1e-12;
  for (int pass = 1; pass <= max_passes; ++pass) {
    double d, mg;
    sweep_pass(m, quad, g, src, scheme, out, bc, d, mg);
    out.fixed_point_passes = pass;
    if (d <= tol * std::max(mg, 1e-300)) return out;
  }
  fail("reflecting-boundary fixed point did not converge in 200 passes "
       "(group " + std::to_string(g) + ")");
}

}  // namespace detail

/// Inverts the streaming-plus-collision operator for one group: given the
/// full emission density, marches every angle through the mesh in its
/// downwind order. Reflecting boundaries are resolved by fixed-point
/// iteration on the boundary angular fluxes (rel. tol 1e-12, max 200 passes).
inline GroupAngularFlux sweep_group(const ProblemModel& m,
                                    const Quadrature& quad, std::size_t g,
                                    const AngularSource& src, Scheme scheme) {
  require(src.angles == quad.size() && src.cells == m.n_cells(),
          "angular source shape does not match model/quadrature");
  const double* base = src.q.data() + g * src.angles * src.cells;
  require(all_finite({base, src.angles * src.cells}),
          "non-finite sweep source");
  const std::size_t cells = src.cells;
  return detail::sweep_group_impl(
      m, quad, g,
      [base, cells](std::size_t a, std::size_t c) { return base[a * cells + c]; },
      scheme);
}

/// Same inversion with an isotropic source given as per-cell moments.
inline GroupAngularFlux sweep_group_isotropic(const ProblemModel& m,
                                              const Quadrature& quad,
                                              std::size_t g,
                                              std::span<const double> qcell,
                                              Scheme scheme) {
  require(qcell.size() == m.n_cells(), "isotropic source shape mismatch");
  require(all_finite(qcell), "non-finite sweep source");
  return detail::sweep_group_impl(
      m, quad, g, [qcell](std::size_t, std::size_t c) { return qcell[c]; },
      scheme);
}

/// Applies L^-1 to every group independently.
inline AngularFlux apply_Linv(const ProblemModel& m, const Quadrature& quad,
                              const AngularSource& src, Scheme scheme) {
  require(src.groups == m.groups(), "angular source group count mismatch");
  AngularFlux out;
  out.group.reserve(src.groups);
  for (std::size_t g = 0; g < src.groups; ++g)
    out.group.push_back(sweep_group(m, quad, g, src, scheme));
  return out;
}

}  // namespace snkit
