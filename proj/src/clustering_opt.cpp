#include "fedstab/clustering_opt.hpp"

#include <optional>

#include "fedstab/stable_set.hpp"

namespace fedstab {

const char* to_string(Direction direction) { return direction == Direction::kMin ? "min" : "max"; }

bool block_feasible(const GainReport& report, Mask block) {
  double prices = 0.0;
  for (Mask m = block; m != 0; m &= m - 1) prices += report.pi(std::countr_zero(m));
  return prices <= report.u(block) + kConstraintTolerance;
}

ClusteringSolution optimal_clustering(const GainReport& report, Direction direction) {
  const int n = report.population();
  const std::size_t size = std::size_t{1} << n;
  std::vector<char> feasible(size, 0);
  for (Mask s = 1; s < size; ++s) feasible[s] = block_feasible(report, s);

  ClusteringSolution best;
  best.direction = direction;
  bool have = false;
  for_each_partition(n, [&](const PartitionEnumerator& it) {
    double objective = 0.0;
    for (Mask block : it.block_masks()) {
      if (!feasible[block]) return;
      objective += report.u(block);
    }
    ++best.feasible_count;
    const bool better = direction == Direction::kMin ? objective < best.objective : objective > best.objective;
    if (!have || better) {
      have = true;
      best.objective = objective;
      best.partition = it.partition();
    }
  });
  return best;
}

}  // namespace fedstab
