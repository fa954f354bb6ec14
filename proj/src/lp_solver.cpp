#include "fedstab/lp_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fedstab/error.hpp"

namespace fedstab::lp {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kRatioTieTol = 1e-12;
constexpr int kIterationLimit = 200000;

enum class Rule { kDantzig, kBland };

// Dense simplex tableau over `rows` equality rows. Columns at or after
// first_artificial are artificial and are skipped once phase 1 is done.
class Tableau {
 public:
  Tableau(int rows, int cols, int first_artificial)
      : m_(rows), cols_(cols), width_(cols + 1), first_art_(first_artificial) {
    data_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(width_), 0.0);
    basis_.assign(static_cast<std::size_t>(m_), -1);
    obj_.assign(static_cast<std::size_t>(width_), 0.0);
  }

  int rows() const { return m_; }
  int cols() const { return cols_; }
  bool is_artificial(int col) const { return col >= first_art_; }
  const std::vector<int>& basis() const { return basis_; }
  void set_basic(int row, int col) { basis_[static_cast<std::size_t>(row)] = col; }
  int iterations() const { return iterations_; }

  double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(j)]; }
  double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(j)]; }
  double& rhs(int i) { return at(i, cols_); }
  double rhs(int i) const { return at(i, cols_); }
  double objective_value() const { return obj_[static_cast<std::size_t>(cols_)]; }

  // obj_[j] = c_B B^-1 A_j - c_j; obj_[cols] = c_B B^-1 b.
  void price(const std::vector<double>& cost) {
    for (int j = 0; j <= cols_; ++j) obj_[static_cast<std::size_t>(j)] = j < cols_ ? -cost[static_cast<std::size_t>(j)] : 0.0;
    for (int i = 0; i < m_; ++i) {
      const double cb = cost[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];
      if (cb == 0.0) continue;
      for (int j = 0; j <= cols_; ++j) obj_[static_cast<std::size_t>(j)] += cb * at(i, j);
    }
  }

  // Maximises the priced objective. true on optimality, false on
  // unboundedness.
  bool optimise(bool allow_artificial) {
    Rule rule = Rule::kDantzig;
    int degenerate_streak = 0;
    const int dantzig_budget = 20 * (m_ + cols_) + 100;
    while (true) {
      if (iterations_ >= kIterationLimit) throw std::runtime_error("simplex iteration limit reached");
      if (rule == Rule::kDantzig && (degenerate_streak > m_ + 10 || iterations_ > dantzig_budget)) rule = Rule::kBland;

      int enter = -1;
      double best = -kOptimalityTol;
      for (int j = 0; j < cols_; ++j) {
        if (!allow_artificial && is_artificial(j)) continue;
        const double d = obj_[static_cast<std::size_t>(j)];
        if (d < best) {
          enter = j;
          if (rule == Rule::kBland) break;
          best = d;
        }
      }
      if (enter < 0) return true;

      int leave = -1;
      double ratio = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = at(i, enter);
        if (a <= kPivotTol) continue;
        const double r = std::max(rhs(i), 0.0) / a;
        if (leave < 0 || r < ratio - kRatioTieTol ||
            (r <= ratio + kRatioTieTol && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          leave = i;
          ratio = r;
        }
      }
      if (leave < 0) return false;
      degenerate_streak = ratio <= kRatioTieTol ? degenerate_streak + 1 : 0;
      pivot(leave, enter);
    }
  }

  void pivot(int r, int e) {
    ++iterations_;
    const double p = at(r, e);
    double* prow = &at(r, 0);
    for (int j = 0; j <= cols_; ++j) prow[j] /= p;
    prow[e] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &at(i, 0);
      const double f = row[e];
      if (f == 0.0) continue;
      for (int j = 0; j <= cols_; ++j) row[j] -= f * prow[j];
      row[e] = 0.0;
    }
    const double f = obj_[static_cast<std::size_t>(e)];
    if (f != 0.0) {
      for (int j = 0; j <= cols_; ++j) obj_[static_cast<std::size_t>(j)] -= f * prow[j];
      obj_[static_cast<std::size_t>(e)] = 0.0;
    }
    basis_[static_cast<std::size_t>(r)] = e;
  }

  // Replaces zero-level artificial basics with non-artificial columns where
  // the row allows it; what remains marks a redundant row.
  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[static_cast<std::size_t>(i)])) continue;
      int best = -1;
      double mag = 1e-9;
      for (int j = 0; j < first_art_; ++j) {
        if (std::abs(at(i, j)) > mag) {
          mag = std::abs(at(i, j));
          best = j;
        }
      }
      if (best >= 0) pivot(i, best);
    }
  }

  // Phase 1 over the artificial columns; false when the optimum leaves a
  // positive artificial sum.
  bool phase_one(double tolerance) {
    std::vector<double> cost(static_cast<std::size_t>(cols_), 0.0);
    bool any = false;
    for (int j = first_art_; j < cols_; ++j) {
      cost[static_cast<std::size_t>(j)] = -1.0;
      any = true;
    }
    if (!any) return true;
    price(cost);
    optimise(true);
    if (-objective_value() > tolerance) return false;
    drive_out_artificials();
    return true;
  }

 private:
  int m_;
  int cols_;
  int width_;
  int first_art_;
  int iterations_ = 0;
  std::vector<double> data_;
  std::vector<double> obj_;
  std::vector<int> basis_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

const char* to_string(Status status) {
  switch (status) {
    case Status::kOptimal:
      return "optimal";
    case Status::kUnbounded:
      return "unbounded";
    case Status::kInfeasible:
      return "infeasible";
  }
  return "?";
}

void Problem::validate() const {
  if (num_vars < 1) throw ContractError("LP needs at least one variable");
  if (objective.size() != static_cast<std::size_t>(num_vars)) throw ContractError("objective length != num_vars");
  for (double c : objective) {
    if (!std::isfinite(c)) throw ContractError("non-finite objective coefficient");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].coeffs.size() != static_cast<std::size_t>(num_vars)) {
      throw ContractError("LP row " + std::to_string(r) + " length != num_vars");
    }
    if (!std::isfinite(rows[r].bound)) throw ContractError("non-finite LP bound");
    for (double a : rows[r].coeffs) {
      if (!std::isfinite(a)) throw ContractError("non-finite LP coefficient");
    }
  }
}

namespace {

double max_abs_bound(const Problem& p) {
  double scale = 1.0;
  for (const auto& row : p.rows) scale = std::max(scale, std::abs(row.bound));
  return scale;
}

// Primal tableau: columns x+ (k), x- (k), one slack per row, and one
// artificial per row with a negative bound (such rows are negated).
Solution solve_primal(const Problem& problem) {
  const int k = problem.num_vars;
  const int m = static_cast<int>(problem.rows.size());
  std::vector<int> art_row;
  for (int i = 0; i < m; ++i) {
    if (problem.rows[static_cast<std::size_t>(i)].bound < 0.0) art_row.push_back(i);
  }
  const int first_art = 2 * k + m;
  Tableau t(m, first_art + static_cast<int>(art_row.size()), first_art);
  int art = 0;
  for (int i = 0; i < m; ++i) {
    const auto& row = problem.rows[static_cast<std::size_t>(i)];
    const bool flip = row.bound < 0.0;
    const double sign = flip ? -1.0 : 1.0;
    for (int j = 0; j < k; ++j) {
      t.at(i, j) = sign * row.coeffs[static_cast<std::size_t>(j)];
      t.at(i, k + j) = -sign * row.coeffs[static_cast<std::size_t>(j)];
    }
    t.at(i, 2 * k + i) = sign;
    t.rhs(i) = sign * row.bound;
    if (flip) {
      t.at(i, first_art + art) = 1.0;
      t.set_basic(i, first_art + art);
      ++art;
    } else {
      t.set_basic(i, 2 * k + i);
    }
  }

  Solution out;
  if (!t.phase_one(kFeasibilityTol * max_abs_bound(problem))) {
    out.status = Status::kInfeasible;
    out.iterations = t.iterations();
    return out;
  }

  std::vector<double> cost(static_cast<std::size_t>(t.cols()), 0.0);
  for (int j = 0; j < k; ++j) {
    cost[static_cast<std::size_t>(j)] = problem.objective[static_cast<std::size_t>(j)];
    cost[static_cast<std::size_t>(k + j)] = -problem.objective[static_cast<std::size_t>(j)];
  }
  t.price(cost);
  const bool bounded = t.optimise(false);
  out.iterations = t.iterations();
  if (!bounded) {
    out.status = Status::kUnbounded;
    return out;
  }

  // Slack and artificial columns are unit vectors with zero phase-2 cost, so
  // only rows without a basic unit column, against the basic structural
  // columns, need a solve; the other rows have zero duals.
  auto unit_row = [&](int col) { return col < first_art ? col - 2 * k : art_row[static_cast<std::size_t>(col - first_art)]; };
  std::vector<int> tight_rows, structural;
  std::vector<bool> covered(static_cast<std::size_t>(m), false);
  for (int i = 0; i < m; ++i) {
    const int col = t.basis()[static_cast<std::size_t>(i)];
    if (col < 2 * k) {
      structural.push_back(col);
    } else {
      covered[static_cast<std::size_t>(unit_row(col))] = true;
    }
  }
  for (int i = 0; i < m; ++i) {
    if (!covered[static_cast<std::size_t>(i)]) tight_rows.push_back(i);
  }
  // Every row owns a slack column, so a simplex basis is always invertible.
  if (tight_rows.size() != structural.size()) throw std::runtime_error("simplex produced a singular basis");
  const int q = static_cast<int>(structural.size());
  std::vector<double> x(static_cast<std::size_t>(k), 0.0);
  std::vector<double> duals(static_cast<std::size_t>(m), 0.0);
  if (q > 0) {
    Eigen::MatrixXd block(q, q);
    Eigen::VectorXd b(q), cb(q);
    for (int r = 0; r < q; ++r) {
      const auto& row = problem.rows[static_cast<std::size_t>(tight_rows[static_cast<std::size_t>(r)])];
      b(r) = row.bound;
      for (int c = 0; c < q; ++c) {
        const int col = structural[static_cast<std::size_t>(c)];
        const double sign = col < k ? 1.0 : -1.0;
        block(r, c) = sign * row.coeffs[static_cast<std::size_t>(col < k ? col : col - k)];
      }
    }
    for (int c = 0; c < q; ++c) cb(c) = cost[static_cast<std::size_t>(structural[static_cast<std::size_t>(c)])];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(block);
    if (!lu.isInvertible()) throw std::runtime_error("simplex produced a singular basis");
    const Eigen::VectorXd xs = lu.solve(b);
    const Eigen::VectorXd ys = lu.transpose().solve(cb);
    for (int c = 0; c < q; ++c) {
      const int col = structural[static_cast<std::size_t>(c)];
      x[static_cast<std::size_t>(col < k ? col : col - k)] += col < k ? xs(c) : -xs(c);
    }
    for (int r = 0; r < q; ++r) duals[static_cast<std::size_t>(tight_rows[static_cast<std::size_t>(r)])] = ys(r);
  }
  out.status = Status::kOptimal;
  out.objective = dot(problem.objective, x);
  out.x = std::move(x);
  out.duals = std::move(duals);
  return out;
}

// Standard-form dual: minimise b.y subject to A^T y = c, y >= 0. Its tableau
// has one row per primal variable, which pays off when rows far outnumber
// variables. nullopt when the dual is infeasible, since the primal may then
// be either unbounded or infeasible.
std::optional<Solution> solve_dual(const Problem& problem) {
  const int k = problem.num_vars;
  const int m = static_cast<int>(problem.rows.size());
  Tableau t(k, m + k, m);
  double c_scale = 1.0;
  for (int j = 0; j < k; ++j) {
    const double c = problem.objective[static_cast<std::size_t>(j)];
    const double sign = c < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < m; ++i) t.at(j, i) = sign * problem.rows[static_cast<std::size_t>(i)].coeffs[static_cast<std::size_t>(j)];
    t.at(j, m + j) = 1.0;
    t.rhs(j) = sign * c;
    t.set_basic(j, m + j);
    c_scale = std::max(c_scale, std::abs(c));
  }
  if (!t.phase_one(kFeasibilityTol * c_scale)) return std::nullopt;

  std::vector<double> cost(static_cast<std::size_t>(t.cols()), 0.0);
  for (int i = 0; i < m; ++i) cost[static_cast<std::size_t>(i)] = -problem.rows[static_cast<std::size_t>(i)].bound;
  t.price(cost);
  Solution out;
  const bool bounded = t.optimise(false);
  out.iterations = t.iterations();
  if (!bounded) {
    out.status = Status::kInfeasible;
    return out;
  }

  // Basis columns are rows of A (or unit vectors for redundant rows). The
  // primal point makes every basic row tight: B^T x = b_B.
  Eigen::MatrixXd basis(k, k);
  Eigen::VectorXd c(k), b_basic(k);
  for (int j = 0; j < k; ++j) {
    const int col = t.basis()[static_cast<std::size_t>(j)];
    c(j) = problem.objective[static_cast<std::size_t>(j)];
    if (col < m) {
      const auto& row = problem.rows[static_cast<std::size_t>(col)];
      for (int r = 0; r < k; ++r) basis(r, j) = row.coeffs[static_cast<std::size_t>(r)];
      b_basic(j) = row.bound;
    } else {
      basis.col(j).setZero();
      basis(col - m, j) = 1.0;
      b_basic(j) = 0.0;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
  if (!lu.isInvertible()) throw std::runtime_error("simplex produced a singular basis");
  const Eigen::VectorXd y_basic = lu.solve(c);
  const Eigen::VectorXd xs = lu.transpose().solve(b_basic);

  std::vector<double> x(xs.data(), xs.data() + k);
  std::vector<double> duals(static_cast<std::size_t>(m), 0.0);
  for (int j = 0; j < k; ++j) {
    const int col = t.basis()[static_cast<std::size_t>(j)];
    if (col < m) duals[static_cast<std::size_t>(col)] = y_basic(j);
  }
  out.status = Status::kOptimal;
  out.objective = dot(problem.objective, x);
  out.x = std::move(x);
  out.duals = std::move(duals);
  return out;
}

}  // namespace

Solution solve(const Problem& problem) {
  problem.validate();
  if (problem.rows.size() > 2 * static_cast<std::size_t>(problem.num_vars)) {
    if (auto via_dual = solve_dual(problem)) return *via_dual;
  }
  return solve_primal(problem);
}

Certificate certify(const Problem& problem, const Solution& solution) {
  Certificate c;
  if (solution.status != Status::kOptimal || !solution.x || !solution.objective || !solution.duals) return c;
  const auto& x = *solution.x;
  const auto& y = *solution.duals;
  if (x.size() != static_cast<std::size_t>(problem.num_vars) || y.size() != problem.rows.size()) return c;

  double by = 0.0;
  std::vector<double> aty(static_cast<std::size_t>(problem.num_vars), 0.0);
  c.min_dual = y.empty() ? 0.0 : *std::min_element(y.begin(), y.end());
  for (std::size_t r = 0; r < problem.rows.size(); ++r) {
    const auto& row = problem.rows[r];
    c.max_primal_violation = std::max(c.max_primal_violation, dot(row.coeffs, x) - row.bound);
    by += row.bound * y[r];
    for (std::size_t j = 0; j < aty.size(); ++j) aty[j] += row.coeffs[j] * y[r];
  }
  for (std::size_t j = 0; j < aty.size(); ++j) {
    c.max_dual_residual = std::max(c.max_dual_residual, std::abs(aty[j] - problem.objective[j]));
  }
  const double cx = dot(problem.objective, x);
  c.objective_mismatch = std::abs(cx - *solution.objective);
  c.duality_gap = std::abs(cx - by);
  c.ok = c.max_primal_violation <= kFeasibilityTol && c.objective_mismatch <= kOptimalityTol &&
         c.max_dual_residual <= kCertificateTol && c.min_dual >= -kCertificateTol && c.duality_gap <= kCertificateTol;
  return c;
}

bool verify(const Problem& problem, const Solution& solution) { return certify(problem, solution).ok; }

}  // namespace fedstab::lp
