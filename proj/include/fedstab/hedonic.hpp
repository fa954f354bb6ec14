#pragma once

// Allocation methods over agent-in-coalition pairs, the preferences they
// induce, and exhaustive Nash-stability checking.

#include <optional>
#include <vector>

#include "fedstab/combinatorics.hpp"

namespace fedstab {

inline constexpr int kMaxAllocationAgents = 16;

// Clustering gain phi_i^S for every i in S. phi_i^{i} is pinned to 0.
class AllocationTable {
 public:
  AllocationTable() = default;
  explicit AllocationTable(int n);

  int population() const { return n_; }
  // n * 2^(n-1)
  std::size_t entry_count() const;

  double operator()(int i, Mask s) const { return values_[index(i, s)]; }
  double operator()(int i, const Coalition& s) const { return (*this)(i, s.mask()); }
  // Throws ContractError if i is not in S, or when setting a singleton entry
  // to anything but 0.
  void set(int i, Mask s, double value);
  double at(int i, Mask s) const;

  bool operator==(const AllocationTable&) const = default;

 private:
  std::size_t index(int i, Mask s) const { return (static_cast<std::size_t>(s) * static_cast<std::size_t>(n_)) + static_cast<std::size_t>(i); }

  int n_ = 0;
  std::vector<double> values_;
};

// Symmetric pairwise gains v(i,j), one entry per unordered pair.
class MutualGainVector {
 public:
  MutualGainVector() = default;
  explicit MutualGainVector(int n);
  MutualGainVector(int n, std::vector<double> values);

  int population() const { return n_; }
  std::size_t size() const { return values_.size(); }
  // v(i,j) = v(j,i); v(i,i) = 0.
  double operator()(int i, int j) const;
  void set(int i, int j, double value);
  const std::vector<double>& values() const { return values_; }
  // Position of pair (i,j), i < j, in values(); lexicographic pair order.
  std::size_t pair_index(int i, int j) const;

  bool operator==(const MutualGainVector&) const = default;

 private:
  int n_ = 0;
  std::vector<double> values_;
};

enum class Preference { kFirstBetter, kSecondBetter, kIndifferent };

struct Deviation {
  int agent = -1;
  Coalition target;  // empty coalition = going alone
  double current_value = 0.0;
  double deviation_value = 0.0;
};

struct StabilityCertificate {
  Partition partition;
  bool stable = true;
  std::optional<Deviation> witness;
};

AllocationTable phi_from_v(const MutualGainVector& v);

// phi_i^S = sum_{j in S, j != i} v(i,j), evaluated without a table.
double separable_gain(int i, Mask s, const MutualGainVector& v);

Preference prefers(int i, const Coalition& s, const Coalition& t, const AllocationTable& phi);

StabilityCertificate check_nash_stable(const Partition& partition, const AllocationTable& phi);
StabilityCertificate check_nash_stable(const Partition& partition, const MutualGainVector& v);

// Every Nash-stable partition, in enumeration order. threads > 1 splits the
// enumeration; the result order does not depend on it.
std::vector<Partition> nash_stable_partitions(const AllocationTable& phi, int threads = 1);

std::optional<Partition> first_nash_stable_partition(const AllocationTable& phi);

}  // namespace fedstab
