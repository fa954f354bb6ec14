#include "fedstab/hedonic.hpp"

#include <gtest/gtest.h>

#include "fedstab/error.hpp"
#include "test_support.hpp"

namespace fedstab {
namespace {

MutualGainVector triangle() {
  MutualGainVector v(3);
  v.set(0, 1, 1.0);
  v.set(0, 2, -1.0);
  v.set(1, 2, 1.0);
  return v;
}

// phi_i^{T u i} for every T in the partition plus T = empty, by hand.
bool stable_by_brute_force(const Partition& p, const AllocationTable& phi) {
  const int n = p.population();
  for (int i = 0; i < n; ++i) {
    const double own = phi(i, p.block_of(i));
    if (own < 0.0) return false;
    for (const auto& b : p.blocks()) {
      if (b.contains(i)) continue;
      if (phi(i, b.with(i)) > own) return false;
    }
  }
  return true;
}

TEST(AllocationTable, EntryCountAndSingletons) {
  for (int n = 1; n <= 8; ++n) EXPECT_EQ(AllocationTable(n).entry_count(), static_cast<std::size_t>(n) << (n - 1));
  AllocationTable phi(3);
  EXPECT_THROW(phi.set(0, 0b001, 1.0), ContractError);
  EXPECT_NO_THROW(phi.set(0, 0b001, 0.0));
  EXPECT_THROW(phi.set(2, 0b011, 1.0), ContractError);
  EXPECT_THROW(phi.at(2, 0b011), ContractError);
}

TEST(MutualGainVector, Symmetric) {
  MutualGainVector v(4);
  EXPECT_EQ(v.size(), 6u);
  v.set(2, 1, 3.5);
  EXPECT_DOUBLE_EQ(v(1, 2), 3.5);
  EXPECT_DOUBLE_EQ(v(2, 1), 3.5);
  EXPECT_DOUBLE_EQ(v(3, 3), 0.0);
  EXPECT_EQ(v.pair_index(0, 1), 0u);
  EXPECT_EQ(v.pair_index(2, 3), 5u);
}

TEST(PhiFromV, Examples) {
  EXPECT_EQ(phi_from_v(MutualGainVector(4)), AllocationTable(4));
  const AllocationTable phi = phi_from_v(triangle());
  EXPECT_DOUBLE_EQ(phi(0, Mask{0b111}), 0.0);
  EXPECT_DOUBLE_EQ(phi(1, Mask{0b111}), 2.0);
  Rng rng(1);
  const auto v = testing::random_mutual_gains(6, rng);
  const auto table = phi_from_v(v);
  for (int i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(table(i, Mask{1} << i), 0.0);
    for (int j = i + 1; j < 6; ++j) {
      const Mask pair = (Mask{1} << i) | (Mask{1} << j);
      EXPECT_DOUBLE_EQ(table(i, pair), v(i, j));
      EXPECT_DOUBLE_EQ(table(j, pair), v(i, j));
    }
    for (Mask s = 1; s < 64; ++s) {
      if ((s >> i) & 1u) EXPECT_DOUBLE_EQ(table(i, s), separable_gain(i, s, v));
    }
  }
}

TEST(Prefers, Examples) {
  AllocationTable phi(3);
  phi.set(0, 0b011, 2.0);
  phi.set(0, 0b101, 1.0);
  const Coalition s(0b011, 3), t(0b101, 3);
  EXPECT_EQ(prefers(0, s, s, phi), Preference::kIndifferent);
  EXPECT_EQ(prefers(0, s, t, phi), Preference::kFirstBetter);
  EXPECT_EQ(prefers(0, t, s, phi), Preference::kSecondBetter);
  EXPECT_THROW(prefers(2, s, t, phi), ContractError);
}

TEST(Prefers, Transitive) {
  Rng rng(2);
  const auto phi = testing::random_allocation(4, rng);
  std::vector<Coalition> with0;
  for (Mask m = 1; m < 16; ++m) {
    if (m & 1u) with0.emplace_back(m, 4);
  }
  for (const auto& a : with0) {
    for (const auto& b : with0) {
      for (const auto& c : with0) {
        if (prefers(0, a, b, phi) != Preference::kSecondBetter && prefers(0, b, c, phi) != Preference::kSecondBetter) {
          EXPECT_NE(prefers(0, a, c, phi), Preference::kSecondBetter);
        }
      }
    }
  }
}

TEST(CheckNashStable, Examples) {
  for (int n = 1; n <= 5; ++n) {
    const AllocationTable zero(n);
    PartitionEnumerator it(n);
    while (auto p = it.next()) EXPECT_TRUE(check_nash_stable(*p, zero).stable);
  }
  EXPECT_TRUE(check_nash_stable(Partition::grand(1), AllocationTable(1)).stable);

  const Partition p({Coalition(0b011, 3), Coalition(0b100, 3)}, 3);
  EXPECT_TRUE(check_nash_stable(p, phi_from_v(triangle())).stable);
  EXPECT_TRUE(check_nash_stable(p, triangle()).stable);
}

TEST(CheckNashStable, WitnessScanOrderAndReplay) {
  AllocationTable phi(2);
  phi.set(0, 0b11, 1.0);
  phi.set(1, 0b11, -1.0);
  const auto cert = check_nash_stable(Partition::grand(2), phi);
  EXPECT_FALSE(cert.stable);
  ASSERT_TRUE(cert.witness);
  EXPECT_EQ(cert.witness->agent, 1);
  EXPECT_TRUE(cert.witness->target.is_empty());
  EXPECT_GT(cert.witness->deviation_value, cert.witness->current_value);
}

TEST(CheckNashStable, WitnessesAreVerifiable) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 5));
    const auto phi = testing::random_allocation(n, rng);
    PartitionEnumerator it(n);
    while (auto p = it.next()) {
      const auto cert = check_nash_stable(*p, phi);
      EXPECT_EQ(cert.stable, stable_by_brute_force(*p, phi));
      if (cert.stable) continue;
      ASSERT_TRUE(cert.witness);
      const int i = cert.witness->agent;
      EXPECT_FALSE(cert.witness->target.contains(i));
      const double before = phi(i, p->block_of(i));
      const double after = phi(i, cert.witness->target.with(i));
      EXPECT_GT(after, before);
    }
  }
}

TEST(MappingM, Examples) {
  EXPECT_EQ(nash_stable_partitions(AllocationTable(3)).size(), 5u);

  // Agent 1 leaves the grand coalition; from singletons agent 0 joins
  // agent 1 (1 > 0), so no partition is stable.
  AllocationTable phi(2);
  phi.set(0, 0b11, 1.0);
  phi.set(1, 0b11, -1.0);
  EXPECT_TRUE(nash_stable_partitions(phi).empty());
  const auto cert = check_nash_stable(Partition::singletons(2), phi);
  ASSERT_TRUE(cert.witness);
  EXPECT_EQ(cert.witness->agent, 0);
  EXPECT_EQ(cert.witness->target, Coalition::singleton(1, 2));
}

TEST(MappingM, SeparableSymmetricAlwaysNonEmpty) {
  Rng rng(100);
  for (int trial = 0; trial < 120; ++trial) {
    const int n = 2 + trial % 6;
    const auto v = testing::random_mutual_gains(n, rng);
    EXPECT_FALSE(nash_stable_partitions(phi_from_v(v)).empty()) << "trial " << trial;
  }
}

TEST(MappingM, AgreesWithChecker) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 5));
    const auto phi = testing::random_allocation(n, rng);
    const auto listed = nash_stable_partitions(phi);
    std::size_t k = 0;
    PartitionEnumerator it(n);
    while (auto p = it.next()) {
      const bool stable = check_nash_stable(*p, phi).stable;
      const bool in_list = k < listed.size() && listed[k] == *p;
      EXPECT_EQ(stable, in_list);
      if (in_list) ++k;
    }
    EXPECT_EQ(k, listed.size());
    const auto first = first_nash_stable_partition(phi);
    EXPECT_EQ(first.has_value(), !listed.empty());
    if (first) EXPECT_EQ(*first, listed.front());
  }
}

TEST(MappingM, ThreadCountDoesNotChangeResult) {
  Rng rng(13);
  const auto phi = phi_from_v(testing::random_mutual_gains(7, rng));
  const auto one = nash_stable_partitions(phi, 1);
  EXPECT_EQ(one, nash_stable_partitions(phi, 3));
  EXPECT_EQ(one, nash_stable_partitions(phi, 8));
}

TEST(MappingM, ShiftInvariantAwayFromSingletonComparison) {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 4;
    const int agent = static_cast<int>(rng.uniform_int(0, n - 1));
    const double c = rng.uniform(-0.5, 0.5);
    const auto phi = testing::random_allocation(n, rng);
    AllocationTable shifted = phi;
    for (Mask s = 1; s < 16; ++s) {
      if (((s >> agent) & 1u) && std::popcount(s) >= 2) shifted.set(agent, s, phi(agent, s) + c);
    }
    PartitionEnumerator it(n);
    while (auto p = it.next()) {
      const Coalition& own = p->block_of(agent);
      const double value = phi(agent, own);
      // The shifted agent compares only non-singleton options, and the
      // comparison against going alone has the same sign before and after.
      if (own.size() < 2 || value < 0.0 || value + c < 0.0) continue;
      EXPECT_EQ(check_nash_stable(*p, phi).stable, check_nash_stable(*p, shifted).stable);
    }
  }
}

TEST(MappingM, Capacity) { EXPECT_THROW(nash_stable_partitions(AllocationTable(14)), CapacityError); }

}  // namespace
}  // namespace fedstab
