#pragma once

// Enumeration primitives over agent subsets, set partitions and reception
// vectors. Agents are 0-indexed; a coalition is a bitmask over {0..n-1}.

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fedstab {

using Mask = std::uint32_t;

inline constexpr int kMaxSubsetAgents = 20;
inline constexpr int kMaxPartitionAgents = 13;
inline constexpr int kMaxReceptionBits = 20;

class Coalition {
 public:
  Coalition() = default;
  Coalition(Mask members, int n);

  static Coalition empty(int n) { return Coalition(0, n); }
  static Coalition singleton(int i, int n);
  static Coalition grand(int n);
  static Coalition of(std::span<const int> members, int n);

  Mask mask() const { return mask_; }
  int population() const { return n_; }
  int size() const { return std::popcount(mask_); }
  bool is_empty() const { return mask_ == 0; }
  bool contains(int i) const { return i >= 0 && i < n_ && ((mask_ >> i) & 1u); }
  // Ascending agent indices.
  std::vector<int> members() const;

  Coalition with(int i) const { return Coalition(mask_ | (Mask{1} << i), n_); }
  Coalition without(int i) const { return Coalition(mask_ & ~(Mask{1} << i), n_); }

  bool operator==(const Coalition&) const = default;

  std::string to_string() const;

 private:
  Mask mask_ = 0;
  int n_ = 0;
};

class Partition {
 public:
  Partition() = default;
  // Validates disjointness, non-emptiness and coverage; canonicalises order.
  Partition(std::vector<Coalition> blocks, int n);

  // Groups agents by equal label; labels may be arbitrary ints.
  static Partition from_labels(std::span<const int> labels);
  static Partition singletons(int n);
  static Partition grand(int n);

  int population() const { return n_; }
  const std::vector<Coalition>& blocks() const { return blocks_; }
  std::size_t num_blocks() const { return blocks_.size(); }
  // Index into blocks() of the block containing agent i.
  int block_index_of(int i) const { return owner_[static_cast<std::size_t>(i)]; }
  const Coalition& block_of(int i) const { return blocks_[static_cast<std::size_t>(block_index_of(i))]; }
  // Restricted-growth string: label of each agent = index of its block.
  std::vector<int> labels() const;

  bool operator==(const Partition& other) const { return n_ == other.n_ && blocks_ == other.blocks_; }

  std::string to_string() const;

 private:
  std::vector<Coalition> blocks_;
  std::vector<int> owner_;
  int n_ = 0;
};

struct ReceptionVector {
  Mask received = 0;  // bit i set iff agent i's upload arrived
  int n = 0;

  bool bit(int i) const { return (received >> i) & 1u; }
  bool operator==(const ReceptionVector&) const = default;
};

// All subsets of {0..n-1} with |S| >= min_size, ascending mask order.
class SubsetEnumerator {
 public:
  SubsetEnumerator(int n, int min_size);
  std::optional<Coalition> next();

 private:
  int n_;
  int min_size_;
  std::uint64_t cursor_ = 0;
  std::uint64_t end_;
};

// Set partitions in restricted-growth-string lexicographic order, starting
// from the grand coalition and ending with all singletons.
class PartitionEnumerator {
 public:
  explicit PartitionEnumerator(int n);

  // Advances; false once exhausted.
  bool advance();
  // Current restricted-growth string. Valid after advance() returned true.
  const std::vector<int>& rgs() const { return rgs_; }
  int num_blocks() const { return num_blocks_; }
  // Block masks indexed by RGS label.
  const std::vector<Mask>& block_masks() const { return masks_; }
  Partition partition() const;

  std::optional<Partition> next();

 private:
  void rebuild_masks();

  int n_;
  bool started_ = false;
  bool done_ = false;
  std::vector<int> rgs_;
  std::vector<int> prefix_max_;  // prefix_max_[i] = max(rgs_[0..i])
  std::vector<Mask> masks_;
  int num_blocks_ = 0;
};

// All 2^|S| reception vectors supported on S; bits outside S are zero.
class ReceptionEnumerator {
 public:
  explicit ReceptionEnumerator(const Coalition& coalition);
  std::optional<ReceptionVector> next();

 private:
  std::vector<int> members_;
  int n_;
  std::uint64_t cursor_ = 0;
  std::uint64_t end_;
};

// {(i,j) in S x S : j > i}, lexicographic.
std::vector<std::pair<int, int>> pairs_of(const Coalition& coalition);

template <typename Fn>
void for_each_subset(int n, int min_size, Fn&& fn) {
  SubsetEnumerator it(n, min_size);
  while (auto s = it.next()) fn(*s);
}

template <typename Fn>
void for_each_partition(int n, Fn&& fn) {
  PartitionEnumerator it(n);
  while (it.advance()) fn(it);
}

void require_subset_capacity(int n);
void require_partition_capacity(int n);

}  // namespace fedstab
