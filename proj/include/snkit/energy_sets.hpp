#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

#include "snkit/core.hpp"
#include "snkit/flux.hpp"
#include "snkit/operators.hpp"

namespace snkit {

/// Contiguous per-set group ranges partitioning a Krylov-solved block,
/// balanced to within one group.
struct EnergySetLayout {
  GroupRange block;
  std::vector<GroupRange> sets;

  std::size_t set_count() const { return sets.size(); }
};

inline EnergySetLayout make_energy_sets(GroupRange block,
                                        std::size_t set_count) {
  require(set_count >= 1, "energy set count must be >= 1");
  require(set_count <= std::max<std::size_t>(block.count(), 1),
          "more energy sets than groups in the block");
  EnergySetLayout layout;
  layout.block = block;
  const std::size_t n = block.count();
  const std::size_t base = n / set_count;
  const std::size_t rem = n % set_count;
  std::size_t g = block.begin;
  for (std::size_t s = 0; s < set_count; ++s) {
    const std::size_t len = base + (s < rem ? 1 : 0);
    layout.sets.push_back({g, g + len});
    g += len;
  }
  return layout;
}

/// Sums per-set additive contributions element-wise in ascending set order
/// and hands every set its owned group block (in shared memory: the summed
/// full vector, from which each set reads its rows). One set is the
/// identity. Bitwise deterministic for a fixed set count.
inline std::vector<double> reduce_plus_scatter(
    const EnergySetLayout& layout,
    const std::vector<std::vector<double>>& partials) {
  require(partials.size() == layout.set_count(),
          "reduce_plus_scatter: one contribution per set required");
  for (const auto& p : partials)
    require(p.size() == partials.front().size(),
            "reduce_plus_scatter: contribution shape mismatch");
  std::vector<double> total = partials.front();
  for (std::size_t s = 1; s < partials.size(); ++s)
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += partials[s][i];
  return total;
}

/// Runs fn(set_index) for every set, concurrently when there is more than
/// one. Callers must write only set-owned rows; all cross-set combination
/// goes through reduce_plus_scatter.
template <class Fn>
void run_per_set(const EnergySetLayout& layout, Fn&& fn) {
  if (layout.set_count() == 1) {
    fn(std::size_t{0});
    return;
  }
  std::vector<std::exception_ptr> errors(layout.set_count());
  std::vector<std::thread> workers;
  workers.reserve(layout.set_count());
  for (std::size_t s = 0; s < layout.set_count(); ++s)
    workers.emplace_back([&fn, &errors, s] {
      try {
        fn(s);
      } catch (...) {
        errors[s] = std::current_exception();
      }
    });
  for (auto& w : workers) w.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace snkit
