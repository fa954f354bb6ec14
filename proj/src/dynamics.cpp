#include "fedstab/dynamics.hpp"

#include <numeric>
#include <string>

#include "fedstab/error.hpp"
#include "fedstab/rng.hpp"

namespace fedstab {

namespace {

void require_same_population(const StrategyTuple& sigma, const MutualGainVector& v) {
  if (sigma.population() != v.population()) throw ContractError("strategy tuple and gain vector sizes differ");
}

// Gain agent i would get under each label, holding everyone else fixed.
// Summation runs over ascending j so values match separable_gain exactly.
std::vector<double> label_gains(int i, const StrategyTuple& sigma, const MutualGainVector& v) {
  const int n = sigma.population();
  std::vector<double> gains(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    gains[static_cast<std::size_t>(sigma[j])] += v(i, j);
  }
  return gains;
}

double block_pair_sum(Mask block, const MutualGainVector& v) {
  double total = 0.0;
  for (Mask a = block; a != 0; a &= a - 1) {
    const int i = std::countr_zero(a);
    for (Mask b = a & (a - 1); b != 0; b &= b - 1) total += v(i, std::countr_zero(b));
  }
  return total;
}

}  // namespace

StrategyTuple::StrategyTuple(std::vector<int> labels) : labels_(std::move(labels)) {
  const int n = static_cast<int>(labels_.size());
  for (int l : labels_) {
    if (l < 0 || l >= n) throw ContractError("strategy label " + std::to_string(l) + " outside 0.." + std::to_string(n - 1));
  }
}

StrategyTuple StrategyTuple::singletons(int n) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::iota(labels.begin(), labels.end(), 0);
  return StrategyTuple(std::move(labels));
}

StrategyTuple StrategyTuple::grand(int n) { return StrategyTuple(std::vector<int>(static_cast<std::size_t>(n), 0)); }

StrategyTuple StrategyTuple::from_partition(const Partition& partition) { return StrategyTuple(partition.labels()); }

StrategyTuple StrategyTuple::with(int i, int label) const {
  auto labels = labels_;
  labels.at(static_cast<std::size_t>(i)) = label;
  return StrategyTuple(std::move(labels));
}

Partition partition_of(const StrategyTuple& sigma) { return Partition::from_labels(sigma.labels()); }

double player_gain(int i, const StrategyTuple& sigma, const MutualGainVector& v) {
  require_same_population(sigma, v);
  double total = 0.0;
  for (int j = 0; j < sigma.population(); ++j) {
    if (j != i && sigma[j] == sigma[i]) total += v(i, j);
  }
  return total;
}

double potential(const StrategyTuple& sigma, const MutualGainVector& v) {
  require_same_population(sigma, v);
  double total = 0.0;
  const int n = sigma.population();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (sigma[i] == sigma[j]) total += v(i, j);
    }
  }
  return total;
}

std::optional<int> best_reply(int i, const StrategyTuple& sigma, const MutualGainVector& v) {
  require_same_population(sigma, v);
  const auto gains = label_gains(i, sigma, v);
  const int current_label = sigma[i];
  double best = gains[static_cast<std::size_t>(current_label)];
  std::optional<int> choice;
  for (int l = 0; l < sigma.population(); ++l) {
    if (l != current_label && gains[static_cast<std::size_t>(l)] > best) {
      best = gains[static_cast<std::size_t>(l)];
      choice = l;
    }
  }
  return choice;
}

DynamicsTrace run_dynamics(const StrategyTuple& start, const MutualGainVector& v, const Schedule& schedule,
                           std::int64_t max_steps) {
  require_same_population(start, v);
  if (max_steps < 1) throw ContractError("max_steps must be >= 1");
  const int n = start.population();
  Rng rng(schedule.seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  DynamicsTrace trace;
  StrategyTuple sigma = start;
  std::int64_t steps = 0;
  bool budget_left = true;
  while (budget_left) {
    if (schedule.kind == ScheduleKind::kRandom) {
      for (int k = n - 1; k > 0; --k) std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(rng.uniform_int(0, k))]);
    }
    ++trace.rounds;
    bool moved = false;
    for (int i : order) {
      const auto label = best_reply(i, sigma, v);
      if (!label) continue;
      if (steps == max_steps) {
        budget_left = false;
        break;
      }
      DynamicsStep step;
      step.deviator = i;
      step.old_label = sigma[i];
      step.new_label = *label;
      step.gain_before = player_gain(i, sigma, v);
      step.potential_before = potential(sigma, v);
      sigma = sigma.with(i, *label);
      step.gain_after = player_gain(i, sigma, v);
      step.potential_after = potential(sigma, v);
      trace.steps.push_back(step);
      ++steps;
      moved = true;
    }
    if (budget_left && !moved) {
      trace.converged = true;
      break;
    }
  }
  trace.final_potential = potential(sigma, v);
  trace.terminal = std::move(sigma);
  return trace;
}

Partition argmax_potential(const MutualGainVector& v) {
  const int n = v.population();
  PartitionEnumerator it(n);
  std::optional<Partition> best;
  double best_value = 0.0;
  while (it.advance()) {
    double value = 0.0;
    for (Mask block : it.block_masks()) value += block_pair_sum(block, v);
    if (!best || value > best_value) {
      best_value = value;
      best = it.partition();
    }
  }
  return *best;
}

}  // namespace fedstab
