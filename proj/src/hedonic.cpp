#include "fedstab/hedonic.hpp"

#include <algorithm>
#include <string>
#include <thread>

#include "fedstab/error.hpp"

namespace fedstab {

namespace {

// Scan order: ascending agent, then blocks by label, then going alone.
template <typename Gain>
std::optional<Deviation> first_deviation(int n, std::span<const Mask> blocks, std::span<const int> owner, Gain&& gain) {
  for (int i = 0; i < n; ++i) {
    const auto own_label = static_cast<std::size_t>(owner[static_cast<std::size_t>(i)]);
    const double current = gain(i, blocks[own_label]);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      if (k == own_label) continue;
      const Mask joined = blocks[k] | (Mask{1} << i);
      const double moved = gain(i, joined);
      if (moved > current) return Deviation{i, Coalition(blocks[k], n), current, moved};
    }
    if (0.0 > current) return Deviation{i, Coalition::empty(n), current, 0.0};
  }
  return std::nullopt;
}

template <typename Gain>
StabilityCertificate certify(const Partition& partition, Gain&& gain) {
  std::vector<Mask> blocks;
  blocks.reserve(partition.num_blocks());
  for (const auto& b : partition.blocks()) blocks.push_back(b.mask());
  const auto owner = partition.labels();
  StabilityCertificate cert{partition, true, std::nullopt};
  cert.witness = first_deviation(partition.population(), blocks, owner, gain);
  cert.stable = !cert.witness.has_value();
  return cert;
}

bool stable_at(const PartitionEnumerator& it, int n, const AllocationTable& phi) {
  auto gain = [&phi](int i, Mask s) { return phi(i, s); };
  return !first_deviation(n, it.block_masks(), it.rgs(), gain).has_value();
}

}  // namespace

AllocationTable::AllocationTable(int n) : n_(n) {
  if (n < 1 || n > kMaxAllocationAgents) {
    throw CapacityError("allocation tables support 1 <= n <= " + std::to_string(kMaxAllocationAgents));
  }
  values_.assign((std::size_t{1} << n) * static_cast<std::size_t>(n), 0.0);
}

std::size_t AllocationTable::entry_count() const {
  return static_cast<std::size_t>(n_) * (std::size_t{1} << (n_ - 1));
}

void AllocationTable::set(int i, Mask s, double value) {
  const Coalition c(s, n_);
  if (!c.contains(i)) throw ContractError("agent " + std::to_string(i) + " not in coalition " + c.to_string());
  if (c.size() == 1 && value != 0.0) throw ContractError("singleton clustering gain is pinned to 0");
  values_[index(i, s)] = value;
}

double AllocationTable::at(int i, Mask s) const {
  const Coalition c(s, n_);
  if (!c.contains(i)) throw ContractError("agent " + std::to_string(i) + " not in coalition " + c.to_string());
  return values_[index(i, s)];
}

MutualGainVector::MutualGainVector(int n) : n_(n) {
  if (n < 1 || n > kMaxSubsetAgents) throw CapacityError("mutual gain vectors support 1 <= n <= 20");
  values_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2, 0.0);
}

MutualGainVector::MutualGainVector(int n, std::vector<double> values) : MutualGainVector(n) {
  if (values.size() != values_.size()) throw ContractError("mutual gain vector needs n(n-1)/2 entries");
  values_ = std::move(values);
}

std::size_t MutualGainVector::pair_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= n_ || i == j) throw ContractError("invalid agent pair");
  const auto a = static_cast<std::size_t>(i);
  const auto nn = static_cast<std::size_t>(n_);
  return a * (2 * nn - a - 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

double MutualGainVector::operator()(int i, int j) const {
  if (i == j) return 0.0;
  return values_[pair_index(i, j)];
}

void MutualGainVector::set(int i, int j, double value) { values_[pair_index(i, j)] = value; }

double separable_gain(int i, Mask s, const MutualGainVector& v) {
  double total = 0.0;
  for (Mask m = s & ~(Mask{1} << i); m != 0; m &= m - 1) total += v(i, std::countr_zero(m));
  return total;
}

AllocationTable phi_from_v(const MutualGainVector& v) {
  const int n = v.population();
  AllocationTable phi(n);
  const Mask full = Coalition::grand(n).mask();
  for (Mask s = 1; s <= full; ++s) {
    if (std::popcount(s) < 2) continue;
    for (Mask m = s; m != 0; m &= m - 1) {
      const int i = std::countr_zero(m);
      phi.set(i, s, separable_gain(i, s, v));
    }
  }
  return phi;
}

Preference prefers(int i, const Coalition& s, const Coalition& t, const AllocationTable& phi) {
  if (!s.contains(i) || !t.contains(i)) {
    throw ContractError("agent " + std::to_string(i) + " must belong to both coalitions");
  }
  const double a = phi(i, s), b = phi(i, t);
  if (a > b) return Preference::kFirstBetter;
  if (b > a) return Preference::kSecondBetter;
  return Preference::kIndifferent;
}

StabilityCertificate check_nash_stable(const Partition& partition, const AllocationTable& phi) {
  if (partition.population() != phi.population()) throw ContractError("partition and allocation sizes differ");
  return certify(partition, [&phi](int i, Mask s) { return phi(i, s); });
}

StabilityCertificate check_nash_stable(const Partition& partition, const MutualGainVector& v) {
  if (partition.population() != v.population()) throw ContractError("partition and gain vector sizes differ");
  return certify(partition, [&v](int i, Mask s) { return separable_gain(i, s, v); });
}

std::vector<Partition> nash_stable_partitions(const AllocationTable& phi, int threads) {
  const int n = phi.population();
  require_partition_capacity(n);
  threads = std::max(threads, 1);
  if (threads == 1) {
    std::vector<Partition> out;
    for_each_partition(n, [&](const PartitionEnumerator& it) {
      if (stable_at(it, n, phi)) out.push_back(it.partition());
    });
    return out;
  }
  // Worker t checks partitions whose enumeration index is t mod threads.
  std::vector<std::vector<std::pair<std::uint64_t, Partition>>> found(static_cast<std::size_t>(threads));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      std::uint64_t index = 0;
      for_each_partition(n, [&](const PartitionEnumerator& it) {
        if (index % static_cast<std::uint64_t>(threads) == static_cast<std::uint64_t>(t) && stable_at(it, n, phi)) {
          found[static_cast<std::size_t>(t)].emplace_back(index, it.partition());
        }
        ++index;
      });
    });
  }
  for (auto& th : pool) th.join();
  std::vector<std::pair<std::uint64_t, Partition>> merged;
  for (auto& f : found) std::move(f.begin(), f.end(), std::back_inserter(merged));
  std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Partition> out;
  out.reserve(merged.size());
  for (auto& m : merged) out.push_back(std::move(m.second));
  return out;
}

std::optional<Partition> first_nash_stable_partition(const AllocationTable& phi) {
  const int n = phi.population();
  PartitionEnumerator it(n);
  while (it.advance()) {
    if (stable_at(it, n, phi)) return it.partition();
  }
  return std::nullopt;
}

}  // namespace fedstab
