#pragma once

#include <atomic>
#include <cstddef>
#include <string>
#include <vector>

#include "snkit/core.hpp"
#include "snkit/energy_sets.hpp"
#include "snkit/model.hpp"
#include "snkit/operators.hpp"
#include "snkit/quadrature.hpp"
#include "snkit/sweep.hpp"

namespace snkit {

struct MgeParams {
  double weight = 1.2;             // Richardson weight
  int relaxations_per_level = 2;
  int v_cycles = 1;
  int grid_depth = 0;              // 0 = auto: halve down to one group
  int coarse_quadrature_order = 0; // 0 = same quadrature as the main solve
};

/// One energy grid: collapsed cross sections on the unchanged spatial mesh.
/// `from_finer` maps the next-finer level's local group index to this
/// level's (empty on the finest level).
struct GridLevel {
  ProblemModel model;
  std::vector<std::size_t> from_finer;
};

struct SetHierarchy {
  GroupRange range;              // global fine groups owned by this set
  std::vector<GridLevel> level;  // finest first
};

struct GridHierarchy {
  std::vector<SetHierarchy> sets;
  std::size_t depth = 0;  // common level count across sets
  std::string warning;    // nonempty when an explicit depth was clamped
};

/// Length of the repeated-halving chain n, ceil(n/2), ..., 1.
inline std::size_t halving_chain_length(std::size_t n) {
  std::size_t count = 1;
  while (n > 1) {
    n = (n + 1) / 2;
    ++count;
  }
  return count;
}

/// Material restricted to a contiguous group window (the finest grid of one
/// energy set).
inline CrossSectionSet restrict_xs(const CrossSectionSet& xs, GroupRange r) {
  CrossSectionSet out;
  out.group_count = r.count();
  for (std::size_t g = r.begin; g < r.end; ++g) {
    out.sigma_t.push_back(xs.sigma_t[g]);
    out.nu_sigma_f.push_back(xs.nu_sigma_f[g]);
    out.chi.push_back(xs.chi[g]);
    std::vector<double> row;
    for (std::size_t gp = r.begin; gp < r.end; ++gp)
      row.push_back(xs.scat[g][gp]);
    out.scat.push_back(std::move(row));
  }
  return out;
}

/// Flat-flux collapse onto coarse groups. mapping[g] is the coarse parent of
/// fine group g; sigma_t and nu_sigma_f collapse as member means, scattering
/// rows sum over members and average over source members, chi sums.
inline CrossSectionSet collapse_xs(const CrossSectionSet& xs,
                                   const std::vector<std::size_t>& mapping,
                                   std::size_t coarse_count) {
  CrossSectionSet out;
  out.group_count = coarse_count;
  out.sigma_t.assign(coarse_count, 0.0);
  out.nu_sigma_f.assign(coarse_count, 0.0);
  out.chi.assign(coarse_count, 0.0);
  out.scat.assign(coarse_count, std::vector<double>(coarse_count, 0.0));

  std::vector<double> members(coarse_count, 0.0);
  for (std::size_t g = 0; g < mapping.size(); ++g) {
    const std::size_t H = mapping[g];
    members[H] += 1.0;
    out.sigma_t[H] += xs.sigma_t[g];
    out.nu_sigma_f[H] += xs.nu_sigma_f[g];
    out.chi[H] += xs.chi[g];
  }
  for (std::size_t H = 0; H < coarse_count; ++H) {
    out.sigma_t[H] /= members[H];
    out.nu_sigma_f[H] /= members[H];
  }
  for (std::size_t g = 0; g < mapping.size(); ++g)
    for (std::size_t gp = 0; gp < mapping.size(); ++gp)
      out.scat[mapping[g]][mapping[gp]] += xs.scat[g][gp];
  for (std::size_t H = 0; H < coarse_count; ++H)
    for (std::size_t Hp = 0; Hp < coarse_count; ++Hp)
      out.scat[H][Hp] /= members[Hp];
  return out;
}

/// Coarse entry = sum of member fine entries, per cell.
inline void restrict_to_coarse(std::span<const double> fine,
                               const std::vector<std::size_t>& mapping,
                               std::size_t coarse_groups, std::size_t nc,
                               std::span<double> coarse) {
  for (std::size_t i = 0; i < coarse_groups * nc; ++i) coarse[i] = 0.0;
  for (std::size_t g = 0; g < mapping.size(); ++g) {
    const std::size_t H = mapping[g];
    for (std::size_t c = 0; c < nc; ++c)
      coarse[H * nc + c] += fine[g * nc + c];
  }
}

/// Fine entry = its coarse parent's entry (piecewise-constant injection).
inline void prolong_to_fine(std::span<const double> coarse,
                            const std::vector<std::size_t>& mapping,
                            std::size_t nc, std::span<double> fine) {
  for (std::size_t g = 0; g < mapping.size(); ++g) {
    const std::size_t H = mapping[g];
    for (std::size_t c = 0; c < nc; ++c)
      fine[g * nc + c] = coarse[H * nc + c];
  }
}

/// Builds the per-set energy-grid hierarchy. Levels halve the group count
/// (rounded up) by pairing adjacent groups until one group remains; with
/// several sets, every set uses the shallowest chain, the one implied by
/// the set with the fewest groups. An explicit grid_depth truncates the
/// chain and is clamped (with a warning) when it exceeds it.
inline GridHierarchy build_hierarchy(const ProblemModel& m,
                                     const EnergySetLayout& layout,
                                     const MgeParams& params) {
  require(params.weight > 0.0, "MGE weight must be positive");
  require(params.relaxations_per_level >= 1, "MGE relaxations must be >= 1");
  require(params.v_cycles >= 1, "MGE V-cycle count must be >= 1");

  GridHierarchy h;
  std::size_t min_groups = layout.block.count();
  for (const auto& s : layout.sets)
    min_groups = std::min(min_groups, s.count());
  const std::size_t full_depth = halving_chain_length(min_groups);
  h.depth = full_depth;
  if (params.grid_depth > 0) {
    if (static_cast<std::size_t>(params.grid_depth) > full_depth) {
      h.warning = "requested grid depth " + std::to_string(params.grid_depth) +
                  " exceeds the halving chain; clamped to " +
                  std::to_string(full_depth);
      h.depth = full_depth;
    } else {
      h.depth = static_cast<std::size_t>(params.grid_depth);
    }
  }

  for (const auto& range : layout.sets) {
    SetHierarchy sh;
    sh.range = range;

    GridLevel finest;
    finest.model = m;
    finest.model.fixed_source.clear();
    finest.model.materials.clear();
    for (const auto& xs : m.materials)
      finest.model.materials.push_back(restrict_xs(xs, range));
    sh.level.push_back(std::move(finest));

    for (std::size_t l = 1; l < h.depth; ++l) {
      const auto& fine = sh.level.back();
      const std::size_t nf = fine.model.groups();
      const std::size_t ncoarse = (nf + 1) / 2;
      GridLevel coarse;
      coarse.from_finer.resize(nf);
      for (std::size_t g = 0; g < nf; ++g) coarse.from_finer[g] = g / 2;
      coarse.model = fine.model;
      coarse.model.materials.clear();
      for (const auto& xs : fine.model.materials)
        coarse.model.materials.push_back(
            collapse_xs(xs, coarse.from_finer, ncoarse));
      sh.level.push_back(std::move(coarse));
    }
    h.sets.push_back(std::move(sh));
  }
  return h;
}

/// Weighted Richardson relaxation:
///   x^m = (I + w (TMS - I)) x^(m-1) + w b,
/// applied `count` times on one level's (unshifted) operator.
inline void relax(const ProblemModel& level_model, const Quadrature& quad,
                  Scheme scheme, std::span<double> x, std::span<const double> b,
                  double weight, int count) {
  const std::size_t n = x.size();
  const GroupRange all{0, level_model.groups()};
  std::vector<double> src(n), tms(n);
  for (int it = 0; it < count; ++it) {
    detail::block_source_rows(level_model, x, all, 0.0, all.begin, all.end,
                              src);
    detail::block_tm_rows(level_model, quad, scheme, src, all.begin, all.end,
                          tms);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = x[i] + weight * (tms[i] - x[i] + b[i]);
  }
}

/// The multigrid-in-energy right preconditioner G^-1. Each energy set runs
/// its own mini V-cycle on its own groups with no cross-set communication;
/// every stage is linear with zero initial corrections, so a fixed
/// configuration is a fixed linear operator. Groups outside the Krylov
/// block pass through unchanged.
class MgePreconditioner {
 public:
  MgePreconditioner(const ProblemModel& m, const Quadrature& main_quad,
                    Scheme scheme, const EnergySetLayout& layout,
                    const MgeParams& params)
      : model_(&m),
        scheme_(scheme),
        layout_(layout),
        params_(params),
        hierarchy_(build_hierarchy(m, layout, params)),
        relax_count_(0) {
    if (params.coarse_quadrature_order > 0) {
      require(!m.any_reflecting(),
              "a reduced preconditioner quadrature requires vacuum "
              "boundaries on all faces");
      quad_ = build_quadrature(m.dimension, params.coarse_quadrature_order);
    } else {
      quad_ = main_quad;
    }
  }

  const GridHierarchy& hierarchy() const { return hierarchy_; }
  long relaxation_count() const { return relax_count_.load(); }

  void operator()(const std::vector<double>& in,
                  std::vector<double>& out) const {
    const std::size_t nc = model_->n_cells();
    out = in;  // identity outside the block
    run_per_set(layout_, [&](std::size_t s) {
      const auto& sh = hierarchy_.sets[s];
      const std::size_t ng = sh.range.count();
      std::vector<double> b0(ng * nc);
      for (std::size_t g = 0; g < ng; ++g)
        for (std::size_t c = 0; c < nc; ++c)
          b0[g * nc + c] = in[(sh.range.begin + g) * nc + c];

      std::vector<double> x = v_cycle(sh, b0);
      for (int cyc = 1; cyc < params_.v_cycles; ++cyc) {
        std::vector<double> resid = residual(sh.level[0], x, b0);
        const std::vector<double> corr = v_cycle(sh, resid);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += corr[i];
      }

      for (std::size_t g = 0; g < ng; ++g)
        for (std::size_t c = 0; c < nc; ++c)
          out[(sh.range.begin + g) * nc + c] = x[g * nc + c];
    });
  }

 private:
  // b - (I - TMS) x on one level
  std::vector<double> residual(const GridLevel& lvl,
                               std::span<const double> x,
                               std::span<const double> b) const {
    const GroupRange all{0, lvl.model.groups()};
    std::vector<double> src(x.size()), ax(x.size());
    detail::block_source_rows(lvl.model, x, all, 0.0, all.begin, all.end, src);
    detail::block_sweep_rows(lvl.model, quad_, scheme_, x, src, all.begin,
                             all.end, ax);
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - ax[i];
    return r;
  }

  std::vector<double> relaxed(const GridLevel& lvl, std::vector<double> x,
                              std::span<const double> b) const {
    relax(lvl.model, quad_, scheme_, x, b, params_.weight,
          params_.relaxations_per_level);
    relax_count_ += params_.relaxations_per_level;
    return x;
  }

  std::vector<double> v_cycle(const SetHierarchy& sh,
                              const std::vector<double>& b0) const {
    const std::size_t nc = model_->n_cells();
    const std::size_t L = sh.level.size();
    std::vector<std::vector<double>> b(L), x(L);
    b[0] = b0;
    for (std::size_t l = 0; l < L; ++l) {
      x[l] = relaxed(sh.level[l], std::vector<double>(b[l].size(), 0.0), b[l]);
      if (l + 1 < L) {
        const std::vector<double> r = residual(sh.level[l], x[l], b[l]);
        const auto& mapping = sh.level[l + 1].from_finer;
        const std::size_t ngc = sh.level[l + 1].model.groups();
        b[l + 1].assign(ngc * nc, 0.0);
        restrict_to_coarse(r, mapping, ngc, nc, b[l + 1]);
      }
    }
    for (std::size_t l = L - 1; l-- > 0;) {
      const auto& mapping = sh.level[l + 1].from_finer;
      std::vector<double> corr(x[l].size());
      prolong_to_fine(x[l + 1], mapping, nc, corr);
      for (std::size_t i = 0; i < x[l].size(); ++i) x[l][i] += corr[i];
      x[l] = relaxed(sh.level[l], std::move(x[l]), b[l]);
    }
    return std::move(x[0]);
  }

  const ProblemModel* model_;
  Scheme scheme_;
  EnergySetLayout layout_;
  MgeParams params_;
  GridHierarchy hierarchy_;
  Quadrature quad_;
  mutable std::atomic<long> relax_count_;
};

}  // namespace snkit
