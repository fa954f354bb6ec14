#pragma once

// Dense two-phase tableau simplex for small LPs:
//   maximize c.x  subject to  A x <= b,  x free.
// Free variables are split x = x+ - x-. Pivoting is Dantzig's rule until
// the iteration budget or a degenerate streak is exhausted, then Bland's rule.
// Problems with more than twice as many rows as variables are solved through
// their standard-form dual, whose tableau has one row per variable.

#include <optional>
#include <vector>

namespace fedstab::lp {

inline constexpr double kFeasibilityTol = 1e-9;
inline constexpr double kOptimalityTol = 1e-9;
inline constexpr double kCertificateTol = 1e-8;

struct Row {
  std::vector<double> coeffs;
  double bound = 0.0;
};

struct Problem {
  int num_vars = 0;
  std::vector<double> objective;  // maximised
  std::vector<Row> rows;          // coeffs . x <= bound

  // Throws ContractError on shape mismatch or non-finite data.
  void validate() const;
};

enum class Status { kOptimal, kUnbounded, kInfeasible };

struct Solution {
  Status status = Status::kInfeasible;
  std::optional<std::vector<double>> x;
  std::optional<double> objective;
  // Row multipliers y >= 0 with A^T y = c at optimality.
  std::optional<std::vector<double>> duals;
  int iterations = 0;
};

Solution solve(const Problem& problem);

struct Certificate {
  bool ok = false;
  double max_primal_violation = 0.0;
  double max_dual_residual = 0.0;
  double min_dual = 0.0;
  double duality_gap = 0.0;
  double objective_mismatch = 0.0;
};

// Checks an optimal solution: primal feasibility (1e-9), objective = c.x
// (1e-9), dual feasibility and |c.x - b.y| (1e-8).
Certificate certify(const Problem& problem, const Solution& solution);
bool verify(const Problem& problem, const Solution& solution);

const char* to_string(Status status);

}  // namespace fedstab::lp
