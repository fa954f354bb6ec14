#pragma once

#include <cstdint>

#include "fedstab/combinatorics.hpp"
#include "fedstab/gains.hpp"

namespace fedstab {

enum class Direction { kMin, kMax };

// Extremal total cluster gain over partitions whose every block pays its
// members' minimal prices.
struct ClusteringSolution {
  Partition partition;
  double objective = 0.0;
  std::uint64_t feasible_count = 0;
  Direction direction = Direction::kMin;
};

// True iff sum_{i in S} pi_i <= u(S) + 1e-9.
bool block_feasible(const GainReport& report, Mask block);

ClusteringSolution optimal_clustering(const GainReport& report, Direction direction = Direction::kMin);

const char* to_string(Direction direction);

}  // namespace fedstab
