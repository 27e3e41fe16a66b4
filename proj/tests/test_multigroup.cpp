#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <snkit/multigroup.hpp>
#include <snkit/oracle.hpp>
#include <snkit/problems.hpp>

using namespace snkit;

namespace {

FluxVector unit_rhs(const ProblemModel& m, const Quadrature& q, Scheme sc) {
  FluxVector src(m.groups(), m.n_cells(), 1.0);
  return apply_TM(m, q, sc, src);
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    num += d * d;
    den += b[i] * b[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// dense ground truth for (I - TM S~) x = b
std::vector<double> dense_reference(const ProblemModel& m, const Quadrature& q,
                                    Scheme sc, const FluxVector& b,
                                    double rho = 0.0) {
  const std::size_t d = m.groups() * m.n_cells();
  const auto A = probe_operator(
      [&](const std::vector<double>& x) {
        FluxVector v(m.groups(), m.n_cells());
        v.v = x;
        return apply_A(m, q, sc, v, GroupRange::all(m), rho).v;
      },
      d);
  return dense_solve(A, b.v);
}

}  // namespace

TEST_CASE("gauss-seidel: a downscatter-only problem needs one pass") {
  auto m = problem_inf2g();
  m.materials[0].scat = {{0.3, 0.0}, {0.4, 0.5}};  // kill upscatter
  m.set_bc(Face::xlo, Bc::vacuum);
  m.set_bc(Face::xhi, Bc::vacuum);
  const auto q = build_quadrature(1, 4);
  const Scheme sc = Scheme::step_characteristic;
  MultigroupConfig cfg;
  cfg.method = MultigroupMethod::gauss_seidel;
  const auto res = solve_gauss_seidel(m, q, sc, unit_rhs(m, q, sc), cfg);
  CHECK(res.converged);
  CHECK(res.gs_outer_iterations == 0);  // no upscatter block to iterate

  const auto ref = dense_reference(m, q, sc, unit_rhs(m, q, sc));
  CHECK(rel_l2(res.flux.v, ref) <= 1e-7);
}

TEST_CASE("gauss-seidel: zero scattering reproduces TM(q) in one pass") {
  auto m = problem_slab_vac();
  m.materials[0].scat = {{0.0}};
  m.materials[0].nu_sigma_f = {0.0};
  m.materials[0].chi = {0.0};
  const auto q = build_quadrature(1, 8);
  const Scheme sc = Scheme::step_characteristic;
  const FluxVector b = unit_rhs(m, q, sc);
  MultigroupConfig cfg;
  cfg.method = MultigroupMethod::gauss_seidel;
  const auto res = solve_gauss_seidel(m, q, sc, b, cfg);
  CHECK(res.converged);
  CHECK(rel_l2(res.flux.v, b.v) <= 1e-9);
}

TEST_CASE("gauss-seidel requires one energy set") {
  const auto m = problem_up3g();
  const auto q = build_quadrature(1, 4);
  MultigroupConfig cfg;
  cfg.method = MultigroupMethod::gauss_seidel;
  cfg.energy_sets = 2;
  CHECK_THROWS_AS(
      solve_gauss_seidel(m, q, Scheme::step_characteristic,
                         unit_rhs(m, q, Scheme::step_characteristic), cfg),
      Error);
}

TEST_CASE("gauss-seidel and mg-krylov agree on the upscatter problem") {
  const auto m = problem_up3g();
  const auto q = build_quadrature(1, 4);
  const Scheme sc = Scheme::step_characteristic;
  const FluxVector b = unit_rhs(m, q, sc);

  MultigroupConfig gs_cfg;
  gs_cfg.method = MultigroupMethod::gauss_seidel;
  gs_cfg.gs_tolerance = 1e-9;
  const auto gs = solve_gauss_seidel(m, q, sc, b, gs_cfg);
  CHECK(gs.converged);
  CHECK(gs.gs_outer_iterations >= 2);  // upscatter really iterates

  MultigroupConfig kr_cfg;
  kr_cfg.krylov.tolerance = 1e-10;
  const auto kr = solve_mg_krylov(m, q, sc, b, kr_cfg);
  CHECK(kr.converged);

  CHECK(rel_l2(gs.flux.v, kr.flux.v) <= 1e-8);

  const auto ref = dense_reference(m, q, sc, b);
  CHECK(rel_l2(gs.flux.v, ref) <= 1e-7);
  CHECK(rel_l2(kr.flux.v, ref) <= 1e-8);
}

TEST_CASE("mg-krylov on one group matches a plain within-group GMRES") {
  const auto m = problem_slab_vac();
  const auto q = build_quadrature(1, 8);
  const Scheme sc = Scheme::step_characteristic;
  const FluxVector b = unit_rhs(m, q, sc);

  MultigroupConfig cfg;
  const auto block = solve_mg_krylov(m, q, sc, b, cfg);
  CHECK(block.converged);

  const std::size_t nc = m.n_cells();
  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    FluxVector v(1, nc);
    v.v = in;
    out = apply_A(m, q, sc, v).v;
  };
  KrylovStats st;
  const auto x = gmres(apply, b.v, {}, cfg.krylov, st);
  CHECK(st.converged);
  CHECK(st.iterations == block.block_stats.iterations);
  CHECK(rel_l2(block.flux.v, x) <= 1e-12);
}

TEST_CASE("mg-krylov matches the dense oracle on a 3-group 2D problem") {
  auto xs = make_xs(3, {0.8, 1.0, 1.3},
                    {{0.1, 0.0, 0.0}, {0.3, 0.4, 0.1}, {0.0, 0.3, 0.6}},
                    {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
  ProblemModel m;
  m.dimension = 2;
  m.cell_widths_x.assign(4, 0.5);
  m.cell_widths_y.assign(4, 0.75);
  m.material_id.assign(16, 0);
  m.materials = {xs};
  m.quadrature_order = 2;
  const auto q = build_quadrature(2, 2);
  const Scheme sc = Scheme::step;
  const FluxVector b = unit_rhs(m, q, sc);

  MultigroupConfig cfg;
  cfg.krylov.tolerance = 1e-10;
  const auto res = solve_mg_krylov(m, q, sc, b, cfg);
  CHECK(res.converged);
  const auto ref = dense_reference(m, q, sc, b);
  CHECK(rel_l2(res.flux.v, ref) <= 1e-8);
}

TEST_CASE("upscatter partitioning agrees with full partitioning") {
  const auto m = problem_up3g();
  const auto q = build_quadrature(1, 4);
  const Scheme sc = Scheme::step_characteristic;
  const FluxVector b = unit_rhs(m, q, sc);

  MultigroupConfig full;
  full.krylov.tolerance = 1e-10;
  const auto f = solve_mg_krylov(m, q, sc, b, full);

  MultigroupConfig up;
  up.partitioning = Partitioning::upscatter;
  up.krylov.tolerance = 1e-10;
  up.gs_tolerance = 1e-8;  // within-group solves run at 1e-9
  const auto u = solve_mg_krylov(m, q, sc, b, up);

  CHECK(f.converged);
  CHECK(u.converged);
  CHECK(rel_l2(u.flux.v, f.flux.v) <= 1e-7);
}

TEST_CASE("a shifted solve cannot use upscatter partitioning when fission "
          "couples the fast groups") {
  const auto m = problem_up3g();  // chi emits into group 0, block starts at 1
  const auto q = build_quadrature(1, 4);
  const FluxVector b = unit_rhs(m, q, Scheme::step_characteristic);
  MultigroupConfig cfg;
  cfg.partitioning = Partitioning::upscatter;
  ShiftedOperatorSpec shift{0.8};
  CHECK_THROWS_AS(
      solve_mg_krylov(m, q, Scheme::step_characteristic, b, cfg, &shift),
      Error);
}

TEST_CASE("gauss-seidel flags non-convergence on a strongly shifted system") {
  const auto m = problem_inf2g();
  const auto q = build_quadrature(1, 4);
  const Scheme sc = Scheme::step_characteristic;
  const FluxVector b = unit_rhs(m, q, sc);
  MultigroupConfig cfg;
  cfg.method = MultigroupMethod::gauss_seidel;
  cfg.gs_max_iterations = 150;
  // shift at the true gamma = 0.9 makes I - TM S~ singular on the mode
  const auto res = solve_gauss_seidel(m, q, sc, b, cfg, 0.9);
  CHECK(!res.converged);
  CHECK(!res.message.empty());
}

TEST_CASE("reduce_plus_scatter: worked examples") {
  SUBCASE("two sets, disjoint contributions") {
    EnergySetLayout layout = make_energy_sets({0, 2}, 2);
    const auto total = reduce_plus_scatter(layout, {{1.0, 0.0}, {0.0, 2.0}});
    CHECK(total == std::vector<double>{1.0, 2.0});
  }
  SUBCASE("one set is the identity") {
    EnergySetLayout layout = make_energy_sets({0, 3}, 1);
    const std::vector<double> v = {3.0, -1.0, 0.5};
    CHECK(reduce_plus_scatter(layout, {v}) == v);
  }
  SUBCASE("four sets equal the ordered single-array sum to 0 ulp") {
    EnergySetLayout layout = make_energy_sets({0, 8}, 4);
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> parts(4, std::vector<double>(8));
    for (auto& p : parts)
      for (auto& v : p) v = u(rng);
    const auto total = reduce_plus_scatter(layout, parts);
    for (std::size_t i = 0; i < 8; ++i) {
      double s = parts[0][i];
      for (std::size_t k = 1; k < 4; ++k) s += parts[k][i];
      CHECK(total[i] == s);  // bitwise
    }
  }
  SUBCASE("shape mismatch is an internal error") {
    EnergySetLayout layout = make_energy_sets({0, 2}, 2);
    CHECK_THROWS_AS(reduce_plus_scatter(layout, {{1.0, 0.0}}), Error);
  }
}

TEST_CASE("energy set layout balances contiguous ranges within one group") {
  const auto layout = make_energy_sets({1, 28}, 10);  // 27 groups, 10 sets
  REQUIRE(layout.sets.size() == 10);
  std::size_t g = 1;
  std::size_t smallest = 100, largest = 0;
  for (const auto& r : layout.sets) {
    CHECK(r.begin == g);
    g = r.end;
    smallest = std::min(smallest, r.count());
    largest = std::max(largest, r.count());
  }
  CHECK(g == 28);
  CHECK(largest - smallest <= 1);
  CHECK_THROWS_AS(make_energy_sets({0, 2}, 3), Error);
}

TEST_CASE("set-count invariance: bitwise-identical flux, equal iterations") {
  const auto m = problem_up4g();
  const auto q = build_quadrature(1, 4);
  const Scheme sc = Scheme::step_characteristic;
  const FluxVector b = unit_rhs(m, q, sc);

  MultigroupConfig cfg;
  cfg.krylov.tolerance = 1e-9;
  const auto one = solve_mg_krylov(m, q, sc, b, cfg);
  CHECK(one.converged);
  for (std::size_t sets : {std::size_t{2}, std::size_t{4}}) {
    MultigroupConfig c2 = cfg;
    c2.energy_sets = sets;
    const auto res = solve_mg_krylov(m, q, sc, b, c2);
    CHECK(res.converged);
    CHECK(res.block_stats.iterations == one.block_stats.iterations);
    CHECK(res.flux.v == one.flux.v);  // bitwise
  }
}

TEST_CASE("energy sets {1,3} give the identical iterate sequence") {
  const auto m = problem_up3g();
  const auto q = build_quadrature(1, 4);
  const Scheme sc = Scheme::step_characteristic;
  const FluxVector b = unit_rhs(m, q, sc);
  MultigroupConfig cfg;
  const auto a = solve_mg_krylov(m, q, sc, b, cfg);
  MultigroupConfig c3 = cfg;
  c3.energy_sets = 3;
  const auto c = solve_mg_krylov(m, q, sc, b, c3);
  CHECK(a.block_stats.iterations == c.block_stats.iterations);
  CHECK(a.block_stats.residual_history == c.block_stats.residual_history);
  CHECK(a.flux.v == c.flux.v);
}

TEST_CASE("set-count invariance holds in 2D as well") {
  const auto m = problem_mini2d();
  const auto q = build_quadrature(2, 4);
  const Scheme sc = Scheme::step;
  const FluxVector b = unit_rhs(m, q, sc);
  MultigroupConfig cfg;
  const auto one = solve_mg_krylov(m, q, sc, b, cfg);
  MultigroupConfig c2 = cfg;
  c2.energy_sets = 2;
  const auto two = solve_mg_krylov(m, q, sc, b, c2);
  CHECK(one.converged);
  CHECK(two.converged);
  CHECK(one.flux.v == two.flux.v);
  CHECK(one.block_stats.iterations == two.block_stats.iterations);
}
