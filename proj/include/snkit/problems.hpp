#pragma once

#include <string>
#include <vector>

#include "snkit/core.hpp"
#include "snkit/model.hpp"
#include "snkit/xs.hpp"

namespace snkit {

struct BuiltinProblem {
  std::string name;
  std::string description;
  ProblemModel model;
};

namespace detail {

inline ProblemModel slab(std::vector<double> widths, std::vector<int> mats,
                         std::vector<CrossSectionSet> materials, Bc left,
                         Bc right, int quad_order) {
  ProblemModel m;
  m.dimension = 1;
  m.cell_widths_x = std::move(widths);
  m.material_id = std::move(mats);
  m.materials = std::move(materials);
  m.quadrature_order = quad_order;
  m.set_bc(Face::xlo, left);
  m.set_bc(Face::xhi, right);
  return m;
}

inline std::vector<double> uniform(std::size_t n, double w) {
  return std::vector<double>(n, w);
}

inline std::vector<int> same_mat(std::size_t n, int id = 0) {
  return std::vector<int>(n, id);
}

}  // namespace detail

/// 1-group infinite medium (reflecting slab): sigma_t 1.0, sigma_s 0.5,
/// nu_sigma_f 0.6, so k = nu_sigma_f / sigma_a = 1.2 exactly.
inline ProblemModel problem_inf1g() {
  return detail::slab(detail::uniform(4, 1.0), detail::same_mat(4),
                      {make_xs_1g(1.0, 0.5, 0.6)}, Bc::reflecting,
                      Bc::reflecting, 4);
}

/// 2-group infinite medium with upscatter; k = f^T (sigma_t - S)^-1 chi
/// = 10/9 in closed form.
inline ProblemModel problem_inf2g() {
  auto xs = make_xs(2, {1.0, 1.2}, {{0.3, 0.1}, {0.4, 0.5}}, {0.2, 0.9},
                    {1.0, 0.0});
  return detail::slab(detail::uniform(4, 1.0), detail::same_mat(4), {xs},
                      Bc::reflecting, Bc::reflecting, 4);
}

/// 10-cell 1-group vacuum slab; leaky, k below the infinite-medium 1.2.
inline ProblemModel problem_slab_vac() {
  return detail::slab(detail::uniform(10, 0.4), detail::same_mat(10),
                      {make_xs_1g(1.0, 0.5, 0.6)}, Bc::vacuum, Bc::vacuum, 8);
}

/// 3-group slab with strong thermal upscatter (group 2 -> 1), the testbed
/// for Gauss-Seidel vs block-Krylov differences and MGE effectiveness.
inline ProblemModel problem_up3g() {
  auto xs = make_xs(3, {1.0, 1.2, 1.4},
                    {{0.20, 0.00, 0.00},
                     {0.70, 0.50, 0.30},
                     {0.05, 0.60, 0.95}},
                    {0.00, 0.05, 0.14}, {1.0, 0.0, 0.0});
  return detail::slab(detail::uniform(40, 0.5), detail::same_mat(40), {xs},
                      Bc::vacuum, Bc::vacuum, 4);
}

/// 4-group variant of up3g whose group count divides evenly into 1, 2, and
/// 4 energy sets.
inline ProblemModel problem_up4g() {
  auto xs = make_xs(4, {0.9, 1.0, 1.2, 1.4},
                    {{0.15, 0.00, 0.00, 0.00},
                     {0.60, 0.20, 0.00, 0.00},
                     {0.05, 0.65, 0.50, 0.30},
                     {0.00, 0.05, 0.60, 0.95}},
                    {0.00, 0.00, 0.05, 0.14}, {0.7, 0.3, 0.0, 0.0});
  return detail::slab(detail::uniform(16, 0.5), detail::same_mat(16), {xs},
                      Bc::vacuum, Bc::vacuum, 4);
}

/// Two weakly coupled fissile slabs separated by a thick absorber. The
/// slabs differ in width, so the leading mode pair is split rather than
/// degenerate (measured dominance ratio ~0.95) and a flat initial guess
/// excites both modes. The system is kept subcritical so the dominant
/// mode's gamma is the one nearest the RQI initial shift of 1.
inline ProblemModel problem_dr95() {
  auto fuel = make_xs_1g(1.0, 0.5, 0.52);
  auto absorber = make_xs_1g(1.3, 0.3, 0.0);
  std::vector<int> mats;
  for (int i = 0; i < 18; ++i) mats.push_back(0);
  for (int i = 0; i < 6; ++i) mats.push_back(1);
  for (int i = 0; i < 12; ++i) mats.push_back(0);
  return detail::slab(detail::uniform(36, 0.5), std::move(mats),
                      {fuel, absorber}, Bc::vacuum, Bc::vacuum, 4);
}

/// 2D 8x8-cell, 4-group, two materials (fuel center, moderator rim),
/// vacuum everywhere: the oracle-eligible integration case (d = 256).
inline ProblemModel problem_mini2d() {
  auto fuel = make_xs(4, {0.55, 0.75, 0.95, 1.3},
                      {{0.20, 0.00, 0.00, 0.00},
                       {0.25, 0.40, 0.00, 0.00},
                       {0.02, 0.25, 0.55, 0.12},
                       {0.00, 0.01, 0.30, 0.85}},
                      {0.04, 0.05, 0.10, 0.30}, {0.6, 0.4, 0.0, 0.0});
  auto moderator = make_xs(4, {0.30, 0.45, 0.60, 1.1},
                           {{0.10, 0.00, 0.00, 0.00},
                            {0.15, 0.25, 0.00, 0.00},
                            {0.02, 0.18, 0.40, 0.15},
                            {0.00, 0.01, 0.18, 0.90}},
                           {0.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0});
  ProblemModel m;
  m.dimension = 2;
  m.cell_widths_x = detail::uniform(8, 2.5);
  m.cell_widths_y = detail::uniform(8, 2.5);
  m.materials = {fuel, moderator};
  m.quadrature_order = 4;
  for (std::size_t j = 0; j < 8; ++j)
    for (std::size_t i = 0; i < 8; ++i) {
      const bool center = i >= 2 && i < 6 && j >= 2 && j < 6;
      m.material_id.push_back(center ? 0 : 1);
    }
  return m;
}

inline std::vector<BuiltinProblem> builtin_problems() {
  return {
      {"inf1g", "1-group infinite medium, k = 1.2", problem_inf1g()},
      {"inf2g", "2-group infinite medium, k = 10/9", problem_inf2g()},
      {"slab_vac", "10-cell 1-group vacuum slab", problem_slab_vac()},
      {"up3g", "3-group thermal-upscatter slab", problem_up3g()},
      {"up4g", "4-group upscatter slab (divides into 1/2/4 sets)",
       problem_up4g()},
      {"dr95", "two fissile slabs across a thick absorber (high dominance "
               "ratio)", problem_dr95()},
      {"mini2d", "2D 8x8-cell 4-group two-material vacuum problem",
       problem_mini2d()},
  };
}

inline const BuiltinProblem* find_builtin(
    const std::vector<BuiltinProblem>& lib, const std::string& name) {
  for (const auto& p : lib)
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace snkit
