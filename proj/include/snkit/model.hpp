#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "snkit/core.hpp"
#include "snkit/xs.hpp"

namespace snkit {

enum class Bc { vacuum, reflecting };

enum class Face { xlo = 0, xhi = 1, ylo = 2, yhi = 3 };

/// Cartesian mesh + materials + quadrature order + boundary conditions.
/// Cells are indexed row-major, x fastest: c = j * nx + i.
struct ProblemModel {
  int dimension = 1;
  std::vector<double> cell_widths_x;   // [cm]
  std::vector<double> cell_widths_y;   // [cm], empty in 1D
  std::vector<int> material_id;        // per cell
  std::vector<CrossSectionSet> materials;
  int quadrature_order = 2;
  Bc boundary[4] = {Bc::vacuum, Bc::vacuum, Bc::vacuum, Bc::vacuum};
  // optional per-group per-cell isotropic emission density q [n/cm^3 s],
  // group-major; empty when absent (pure eigenvalue problem)
  std::vector<double> fixed_source;

  std::size_t nx() const { return cell_widths_x.size(); }
  std::size_t ny() const { return dimension == 2 ? cell_widths_y.size() : 1; }
  std::size_t n_cells() const { return nx() * ny(); }
  std::size_t groups() const {
    return materials.empty() ? 0 : materials.front().group_count;
  }

  Bc bc(Face f) const { return boundary[static_cast<int>(f)]; }
  void set_bc(Face f, Bc b) { boundary[static_cast<int>(f)] = b; }

  const CrossSectionSet& mat(std::size_t cell) const {
    return materials[static_cast<std::size_t>(material_id[cell])];
  }

  bool fissile() const {
    for (const auto& m : materials)
      if (m.fissile()) return true;
    return false;
  }

  bool any_reflecting() const {
    const int nfaces = dimension == 2 ? 4 : 2;
    for (int f = 0; f < nfaces; ++f)
      if (boundary[f] == Bc::reflecting) return true;
    return false;
  }
};

struct Diagnostic {
  enum class Severity { error, warning };
  Severity severity;
  std::string message;
};

/// Checks model invariants. Hard violations come back as errors; the
/// super-unitary production lint (scattering + fission production exceeding
/// sigma_t in some column) is a warning only.
inline std::vector<Diagnostic> validate_model(const ProblemModel& m) {
  std::vector<Diagnostic> out;
  auto error = [&](const std::string& s) {
    out.push_back({Diagnostic::Severity::error, s});
  };
  auto warning = [&](const std::string& s) {
    out.push_back({Diagnostic::Severity::warning, s});
  };

  if (m.dimension != 1 && m.dimension != 2) error("dimension must be 1 or 2");
  if (m.cell_widths_x.empty()) error("mesh has no x cells");
  if (m.dimension == 2 && m.cell_widths_y.empty())
    error("2D mesh has no y cells");
  if (m.dimension == 1 && !m.cell_widths_y.empty())
    error("1D mesh must not define y widths");
  for (double w : m.cell_widths_x)
    if (!(w > 0.0)) error("nonpositive x cell width");
  for (double w : m.cell_widths_y)
    if (!(w > 0.0)) error("nonpositive y cell width");

  if (m.materials.empty()) {
    error("no materials defined");
    return out;
  }
  const std::size_t G = m.materials.front().group_count;
  if (G < 1) error("materials must have at least one group");
  for (std::size_t im = 0; im < m.materials.size(); ++im) {
    const auto& xs = m.materials[im];
    const std::string tag = "material " + std::to_string(im) + ": ";
    if (xs.group_count != G) error(tag + "group count differs across materials");
    if (xs.sigma_t.size() != xs.group_count ||
        xs.nu_sigma_f.size() != xs.group_count ||
        xs.chi.size() != xs.group_count || xs.scat.size() != xs.group_count) {
      error(tag + "cross-section arrays do not match group count");
      continue;
    }
    bool nonneg = true;
    for (double v : xs.sigma_t) nonneg &= v >= 0.0;
    for (double v : xs.nu_sigma_f) nonneg &= v >= 0.0;
    for (double v : xs.chi) nonneg &= v >= 0.0;
    for (const auto& row : xs.scat) {
      if (row.size() != xs.group_count)
        error(tag + "scattering row length does not match group count");
      for (double v : row) nonneg &= v >= 0.0;
    }
    if (!nonneg) error(tag + "negative cross-section entry");

    double chi_sum = 0.0;
    for (double v : xs.chi) chi_sum += v;
    if (xs.fissile()) {
      if (std::abs(chi_sum - 1.0) > 1e-12)
        error(tag + "fission spectrum must sum to 1, got " +
              std::to_string(chi_sum));
    } else if (chi_sum != 0.0) {
      error(tag + "chi must be all zeros without fission");
    }

    // production lint per column g: everything leaving group g
    for (std::size_t g = 0; g < xs.group_count; ++g) {
      double prod = xs.nu_sigma_f[g];
      for (std::size_t gp = 0; gp < xs.group_count; ++gp)
        prod += xs.scat[gp][g];
      if (prod > xs.sigma_t[g])
        warning(tag + "group " + std::to_string(g) +
                " production " + std::to_string(prod) + " exceeds sigma_t " +
                std::to_string(xs.sigma_t[g]));
    }
  }

  const std::size_t ncells = m.n_cells();
  if (m.material_id.size() != ncells)
    error("material map has " + std::to_string(m.material_id.size()) +
          " entries for " + std::to_string(ncells) + " cells");
  for (int id : m.material_id)
    if (id < 0 || static_cast<std::size_t>(id) >= m.materials.size())
      error("material id " + std::to_string(id) + " out of range");

  if (!m.fixed_source.empty() && m.fixed_source.size() != G * ncells)
    error("fixed source must have G x n_cells entries");
  for (double v : m.fixed_source)
    if (!std::isfinite(v)) error("non-finite fixed source entry");

  return out;
}

inline bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    if (d.severity == Diagnostic::Severity::error) return true;
  return false;
}

}  // namespace snkit
