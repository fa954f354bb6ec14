#include "fedstab/combinatorics.hpp"

#include <algorithm>
#include <sstream>

#include "fedstab/error.hpp"

namespace fedstab {

void require_subset_capacity(int n) {
  if (n < 1 || n > kMaxSubsetAgents) {
    throw CapacityError("subset enumeration supports 1 <= n <= " + std::to_string(kMaxSubsetAgents) +
                        ", got n = " + std::to_string(n));
  }
}

void require_partition_capacity(int n) {
  if (n < 1 || n > kMaxPartitionAgents) {
    throw CapacityError("partition enumeration supports 1 <= n <= " + std::to_string(kMaxPartitionAgents) +
                        ", got n = " + std::to_string(n));
  }
}

Coalition::Coalition(Mask members, int n) : mask_(members), n_(n) {
  if (n < 0 || n > 32) throw ContractError("coalition population out of range");
  if (n < 32 && (members >> n) != 0) {
    throw ContractError("coalition mask " + std::to_string(members) + " has members outside 0.." +
                        std::to_string(n - 1));
  }
}

Coalition Coalition::singleton(int i, int n) {
  if (i < 0 || i >= n) throw ContractError("agent index out of range");
  return Coalition(Mask{1} << i, n);
}

Coalition Coalition::grand(int n) {
  return Coalition(n >= 32 ? ~Mask{0} : (Mask{1} << n) - 1, n);
}

Coalition Coalition::of(std::span<const int> members, int n) {
  Mask m = 0;
  for (int i : members) {
    if (i < 0 || i >= n) throw ContractError("agent index out of range");
    m |= Mask{1} << i;
  }
  return Coalition(m, n);
}

std::vector<int> Coalition::members() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (Mask m = mask_; m != 0; m &= m - 1) out.push_back(std::countr_zero(m));
  return out;
}

std::string Coalition::to_string() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (int i : members()) {
    if (!first) os << ',';
    os << i;
    first = false;
  }
  os << '}';
  return os.str();
}

Partition::Partition(std::vector<Coalition> blocks, int n) : blocks_(std::move(blocks)), n_(n) {
  owner_.assign(static_cast<std::size_t>(n), -1);
  Mask seen = 0;
  for (const auto& b : blocks_) {
    if (b.population() != n) throw ContractError("partition block has wrong population");
    if (b.is_empty()) throw ContractError("partition block is empty");
    if (seen & b.mask()) throw ContractError("partition blocks overlap");
    seen |= b.mask();
  }
  if (seen != Coalition::grand(n).mask()) throw ContractError("partition blocks do not cover all agents");
  std::sort(blocks_.begin(), blocks_.end(), [](const Coalition& a, const Coalition& b) {
    return std::countr_zero(a.mask()) < std::countr_zero(b.mask());
  });
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    for (int i : blocks_[k].members()) owner_[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
}

Partition Partition::from_labels(std::span<const int> labels) {
  const int n = static_cast<int>(labels.size());
  std::vector<std::pair<int, Mask>> groups;
  for (int i = 0; i < n; ++i) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == labels[i]; });
    if (it == groups.end()) {
      groups.emplace_back(labels[i], Mask{1} << i);
    } else {
      it->second |= Mask{1} << i;
    }
  }
  std::vector<Coalition> blocks;
  blocks.reserve(groups.size());
  for (const auto& g : groups) blocks.emplace_back(g.second, n);
  return Partition(std::move(blocks), n);
}

Partition Partition::singletons(int n) {
  std::vector<Coalition> blocks;
  for (int i = 0; i < n; ++i) blocks.push_back(Coalition::singleton(i, n));
  return Partition(std::move(blocks), n);
}

Partition Partition::grand(int n) { return Partition({Coalition::grand(n)}, n); }

std::vector<int> Partition::labels() const { return owner_; }

std::string Partition::to_string() const {
  std::string out = "{";
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (k) out += ',';
    out += blocks_[k].to_string();
  }
  return out + "}";
}

SubsetEnumerator::SubsetEnumerator(int n, int min_size)
    : n_(n), min_size_(min_size), end_(std::uint64_t{1} << std::max(n, 0)) {
  require_subset_capacity(n);
}

std::optional<Coalition> SubsetEnumerator::next() {
  while (cursor_ < end_) {
    const auto m = static_cast<Mask>(cursor_++);
    if (std::popcount(m) >= min_size_) return Coalition(m, n_);
  }
  return std::nullopt;
}

PartitionEnumerator::PartitionEnumerator(int n) : n_(n) {
  require_partition_capacity(n);
  rgs_.assign(static_cast<std::size_t>(n), 0);
  prefix_max_.assign(static_cast<std::size_t>(n), 0);
}

void PartitionEnumerator::rebuild_masks() {
  num_blocks_ = prefix_max_.back() + 1;
  masks_.assign(static_cast<std::size_t>(num_blocks_), 0);
  for (int i = 0; i < n_; ++i) masks_[static_cast<std::size_t>(rgs_[i])] |= Mask{1} << i;
}

bool PartitionEnumerator::advance() {
  if (done_) return false;
  if (!started_) {
    started_ = true;
    rebuild_masks();
    return true;
  }
  int i = n_ - 1;
  while (i >= 1 && rgs_[i] > prefix_max_[i - 1]) --i;
  if (i < 1) {
    done_ = true;
    return false;
  }
  ++rgs_[i];
  prefix_max_[i] = std::max(prefix_max_[i - 1], rgs_[i]);
  for (int j = i + 1; j < n_; ++j) {
    rgs_[j] = 0;
    prefix_max_[j] = prefix_max_[i];
  }
  rebuild_masks();
  return true;
}

Partition PartitionEnumerator::partition() const {
  std::vector<Coalition> blocks;
  blocks.reserve(masks_.size());
  for (Mask m : masks_) blocks.emplace_back(m, n_);
  return Partition(std::move(blocks), n_);
}

std::optional<Partition> PartitionEnumerator::next() {
  if (!advance()) return std::nullopt;
  return partition();
}

ReceptionEnumerator::ReceptionEnumerator(const Coalition& coalition)
    : members_(coalition.members()), n_(coalition.population()) {
  if (coalition.size() > kMaxReceptionBits) {
    throw CapacityError("reception enumeration supports |S| <= " + std::to_string(kMaxReceptionBits));
  }
  end_ = std::uint64_t{1} << members_.size();
}

std::optional<ReceptionVector> ReceptionEnumerator::next() {
  if (cursor_ >= end_) return std::nullopt;
  Mask received = 0;
  for (std::size_t k = 0; k < members_.size(); ++k) {
    if ((cursor_ >> k) & 1u) received |= Mask{1} << members_[k];
  }
  ++cursor_;
  return ReceptionVector{received, n_};
}

std::vector<std::pair<int, int>> pairs_of(const Coalition& coalition) {
  const auto members = coalition.members();
  std::vector<std::pair<int, int>> out;
  if (members.size() < 2) return out;
  out.reserve(members.size() * (members.size() - 1) / 2);
  for (std::size_t a = 0; a < members.size(); ++a) {
    for (std::size_t b = a + 1; b < members.size(); ++b) out.emplace_back(members[a], members[b]);
  }
  return out;
}

}  // namespace fedstab
