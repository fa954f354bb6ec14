#pragma once

// Strategy-tuple game over additively separable symmetric gains: each agent
// picks one of n labels, agents sharing a label form a coalition. The game
// has potential P(sigma) = sum over blocks of sum over member pairs v(i,j).

#include <cstdint>
#include <optional>
#include <vector>

#include "fedstab/combinatorics.hpp"
#include "fedstab/hedonic.hpp"

namespace fedstab {

class StrategyTuple {
 public:
  StrategyTuple() = default;
  // Labels must lie in 0..n-1 where n = labels.size().
  explicit StrategyTuple(std::vector<int> labels);

  static StrategyTuple singletons(int n);
  static StrategyTuple grand(int n);
  static StrategyTuple from_partition(const Partition& partition);

  int population() const { return static_cast<int>(labels_.size()); }
  int operator[](int i) const { return labels_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& labels() const { return labels_; }
  StrategyTuple with(int i, int label) const;

  bool operator==(const StrategyTuple&) const = default;

 private:
  std::vector<int> labels_;
};

struct DynamicsStep {
  int deviator = -1;
  int old_label = -1;
  int new_label = -1;
  double gain_before = 0.0;
  double gain_after = 0.0;
  double potential_before = 0.0;
  double potential_after = 0.0;
};

struct DynamicsTrace {
  std::vector<DynamicsStep> steps;
  StrategyTuple terminal;
  bool converged = false;
  int rounds = 0;
  double final_potential = 0.0;
};

enum class ScheduleKind { kRoundRobin, kRandom };

struct Schedule {
  ScheduleKind kind = ScheduleKind::kRoundRobin;
  std::uint64_t seed = 0;  // kRandom: fresh permutation of agents each round

  static Schedule round_robin() { return {}; }
  static Schedule random(std::uint64_t seed) { return {ScheduleKind::kRandom, seed}; }
};

Partition partition_of(const StrategyTuple& sigma);
double player_gain(int i, const StrategyTuple& sigma, const MutualGainVector& v);
double potential(const StrategyTuple& sigma, const MutualGainVector& v);
// Best strictly improving label (smallest on ties); nullopt when the current
// label is already weakly best.
std::optional<int> best_reply(int i, const StrategyTuple& sigma, const MutualGainVector& v);

DynamicsTrace run_dynamics(const StrategyTuple& start, const MutualGainVector& v, const Schedule& schedule,
                           std::int64_t max_steps);

// Potential maximiser over all partitions; first in enumeration order on ties.
Partition argmax_potential(const MutualGainVector& v);

}  // namespace fedstab
