#include "fedstab/lp_solver.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <limits>

#include "fedstab/error.hpp"
#include "fedstab/rng.hpp"

namespace fedstab::lp {
namespace {

Problem make(int vars, std::vector<double> c, std::vector<Row> rows) { return Problem{vars, std::move(c), std::move(rows)}; }

// Best objective over all vertices: every choice of num_vars rows taken as
// equalities that yields a unique feasible point.
std::optional<double> vertex_oracle(const Problem& p) {
  const int n = p.num_vars;
  const int m = static_cast<int>(p.rows.size());
  std::optional<double> best;
  std::vector<int> pick(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) pick[static_cast<std::size_t>(k)] = k;
  if (m < n) return best;
  while (true) {
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd b(n);
    for (int r = 0; r < n; ++r) {
      const auto& row = p.rows[static_cast<std::size_t>(pick[static_cast<std::size_t>(r)])];
      for (int c = 0; c < n; ++c) a(r, c) = row.coeffs[static_cast<std::size_t>(c)];
      b(r) = row.bound;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.isInvertible()) {
      const Eigen::VectorXd x = lu.solve(b);
      bool feasible = true;
      for (const auto& row : p.rows) {
        double lhs = 0.0;
        for (int c = 0; c < n; ++c) lhs += row.coeffs[static_cast<std::size_t>(c)] * x(c);
        if (lhs > row.bound + 1e-9) feasible = false;
      }
      if (feasible) {
        double obj = 0.0;
        for (int c = 0; c < n; ++c) obj += p.objective[static_cast<std::size_t>(c)] * x(c);
        if (!best || obj > *best) best = obj;
      }
    }
    int k = n - 1;
    while (k >= 0 && pick[static_cast<std::size_t>(k)] == m - n + k) --k;
    if (k < 0) break;
    ++pick[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < n; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

TEST(Solve, Examples) {
  const auto single = make(1, {1.0}, {{{1.0}, 5.0}});
  const auto s1 = solve(single);
  ASSERT_EQ(s1.status, Status::kOptimal);
  EXPECT_NEAR((*s1.x)[0], 5.0, 1e-12);
  EXPECT_TRUE(verify(single, s1));

  const auto square = make(2, {1.0, 1.0}, {{{1.0, 0.0}, 1.0}, {{0.0, 1.0}, 1.0}, {{1.0, 1.0}, 1.0}});
  const auto s2 = solve(square);
  ASSERT_EQ(s2.status, Status::kOptimal);
  EXPECT_NEAR(*s2.objective, 1.0, 1e-12);
  EXPECT_TRUE(verify(square, s2));

  EXPECT_EQ(solve(make(1, {1.0}, {})).status, Status::kUnbounded);
}

TEST(Solve, ZeroObjectiveWithoutRows) {
  const auto p = make(3, {0.0, 0.0, 0.0}, {});
  const auto s = solve(p);
  ASSERT_EQ(s.status, Status::kOptimal);
  EXPECT_DOUBLE_EQ(*s.objective, 0.0);
  EXPECT_TRUE(verify(p, s));
}

TEST(Solve, Infeasible) {
  const auto p = make(1, {1.0}, {{{1.0}, -1.0}, {{-1.0}, -1.0}});
  const auto s = solve(p);
  EXPECT_EQ(s.status, Status::kInfeasible);
  EXPECT_FALSE(s.x);
  EXPECT_FALSE(verify(p, s));
}

TEST(Solve, NegativeBoundsNeedPhaseOne) {
  // x >= 2, y >= 3, x + y <= 10; maximise x - y
  const auto p = make(2, {1.0, -1.0}, {{{-1.0, 0.0}, -2.0}, {{0.0, -1.0}, -3.0}, {{1.0, 1.0}, 10.0}});
  const auto s = solve(p);
  ASSERT_EQ(s.status, Status::kOptimal);
  EXPECT_NEAR(*s.objective, 4.0, 1e-12);
  EXPECT_TRUE(verify(p, s));
}

TEST(Solve, DegenerateCyclingExampleTerminates) {
  // Beale's example (as a maximisation) with sign rows for x >= 0.
  const auto p = make(4, {0.75, -150.0, 0.02, -6.0},
                      {{{0.25, -60.0, -0.04, 9.0}, 0.0},
                       {{0.5, -90.0, -0.02, 3.0}, 0.0},
                       {{0.0, 0.0, 1.0, 0.0}, 1.0},
                       {{-1.0, 0.0, 0.0, 0.0}, 0.0},
                       {{0.0, -1.0, 0.0, 0.0}, 0.0},
                       {{0.0, 0.0, -1.0, 0.0}, 0.0},
                       {{0.0, 0.0, 0.0, -1.0}, 0.0}});
  const auto s = solve(p);
  ASSERT_EQ(s.status, Status::kOptimal);
  EXPECT_NEAR(*s.objective, 0.05, 1e-12);
  EXPECT_TRUE(verify(p, s));
}

TEST(Verify, RejectsPerturbedSolution) {
  const auto p = make(2, {1.0, 1.0}, {{{1.0, 0.0}, 1.0}, {{0.0, 1.0}, 1.0}, {{1.0, 1.0}, 1.0}});
  auto s = solve(p);
  ASSERT_TRUE(verify(p, s));
  (*s.x)[0] += 1e-3;
  EXPECT_FALSE(verify(p, s));
}

TEST(Verify, RejectsStatusMismatch) {
  const auto p = make(1, {1.0}, {});
  Solution s;
  s.status = Status::kUnbounded;
  s.x = std::vector<double>{0.0};
  s.objective = 0.0;
  EXPECT_FALSE(verify(p, s));
}

TEST(Validate, ShapeErrors) {
  EXPECT_THROW(solve(make(0, {}, {})), ContractError);
  EXPECT_THROW(solve(make(2, {1.0}, {})), ContractError);
  EXPECT_THROW(solve(make(1, {1.0}, {{{1.0, 2.0}, 1.0}})), ContractError);
  EXPECT_THROW(solve(make(1, {std::numeric_limits<double>::quiet_NaN()}, {})), ContractError);
}

TEST(Solve, MatchesVertexEnumeration) {
  Rng rng(55);
  int optimal = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 3));
    const int extra = static_cast<int>(rng.uniform_int(0, 5));
    Problem p{n, {}, {}};
    for (int c = 0; c < n; ++c) p.objective.push_back(rng.uniform(-1.0, 1.0));
    // Box rows keep the problem bounded; random rows may make it infeasible.
    for (int c = 0; c < n; ++c) {
      Row up{std::vector<double>(static_cast<std::size_t>(n), 0.0), 3.0};
      Row down{std::vector<double>(static_cast<std::size_t>(n), 0.0), 3.0};
      up.coeffs[static_cast<std::size_t>(c)] = 1.0;
      down.coeffs[static_cast<std::size_t>(c)] = -1.0;
      p.rows.push_back(up);
      p.rows.push_back(down);
    }
    for (int r = 0; r < extra; ++r) {
      Row row{{}, rng.uniform(-2.0, 2.0)};
      for (int c = 0; c < n; ++c) row.coeffs.push_back(std::round(rng.uniform(-3.0, 3.0)));
      p.rows.push_back(row);
    }
    const auto oracle = vertex_oracle(p);
    const auto s = solve(p);
    if (!oracle) {
      EXPECT_EQ(s.status, Status::kInfeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(s.status, Status::kOptimal) << "trial " << trial;
    EXPECT_NEAR(*s.objective, *oracle, 1e-8) << "trial " << trial;
    EXPECT_TRUE(verify(p, s)) << "trial " << trial;
    ++optimal;
  }
  EXPECT_GT(optimal, 100);
}

TEST(Solve, Deterministic) {
  Rng rng(3);
  Problem p{6, {}, {}};
  for (int c = 0; c < 6; ++c) p.objective.push_back(rng.uniform(0.0, 1.0));
  for (int r = 0; r < 12; ++r) {
    Row row{{}, rng.uniform(1.0, 2.0)};
    for (int c = 0; c < 6; ++c) row.coeffs.push_back(rng.uniform(0.0, 1.0));
    p.rows.push_back(row);
  }
  for (int c = 0; c < 6; ++c) {
    Row row{std::vector<double>(6, 0.0), 0.0};
    row.coeffs[static_cast<std::size_t>(c)] = -1.0;
    p.rows.push_back(row);
  }
  const auto a = solve(p);
  const auto b = solve(p);
  ASSERT_EQ(a.status, Status::kOptimal);
  EXPECT_EQ(*a.x, *b.x);
  EXPECT_EQ(*a.duals, *b.duals);
  EXPECT_EQ(*a.objective, *b.objective);
  EXPECT_EQ(a.iterations, b.iterations);
}

}  // namespace
}  // namespace fedstab::lp
