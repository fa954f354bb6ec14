#pragma once

// Monetary layer: cluster gain u(S), minimal price pi_i and marginal gain
// Delta(S) = u(S) - sum_{i in S} pi_i (zero for singletons).

#include <optional>
#include <utility>
#include <vector>

#include "fedstab/combinatorics.hpp"
#include "fedstab/gain_fn.hpp"
#include "fedstab/learning.hpp"

namespace fedstab {

// Inverse losses are clamped here before the gain function is applied.
inline constexpr double kInverseLossCap = 1e12;
inline constexpr double kSuperadditivityTolerance = 1e-9;
inline constexpr int kMaxSuperadditivityAgents = 12;

// f(z) for z > 0; DomainError otherwise.
double gain_fn_eval(const GainFnSpec& spec, double z);

double cluster_gain(const Coalition& coalition, const Scenario& scenario);
double minimal_price(int agent, const Scenario& scenario);
double marginal_gain(const Coalition& coalition, const Scenario& scenario);

// Per-coalition u and Delta over all 2^n masks plus per-agent prices.
class GainReport {
 public:
  GainReport() = default;

  static GainReport from_scenario(const Scenario& scenario);
  // Synthetic report: u(S) = Delta(S) + sum pi for |S| >= 2, u({i}) = pi_i.
  // delta must have 2^n entries; singleton and empty entries are forced to 0.
  static GainReport from_marginal(int n, std::vector<double> delta, std::vector<double> pi);

  int population() const { return n_; }
  double u(Mask s) const { return u_[s]; }
  double delta(Mask s) const { return delta_[s]; }
  double pi(int i) const { return pi_[static_cast<std::size_t>(i)]; }
  double u(const Coalition& s) const { return u(s.mask()); }
  double delta(const Coalition& s) const { return delta(s.mask()); }
  const std::vector<double>& u_table() const { return u_; }
  const std::vector<double>& delta_table() const { return delta_; }
  const std::vector<double>& prices() const { return pi_; }
  // Expected loss per mask; empty for synthetic reports.
  const std::vector<double>& expected_losses() const { return loss_; }

  // GainReport constructed from raw tables (deserialisation). Checks the
  // type invariants and throws ContractError on violation.
  static GainReport from_tables(int n, std::vector<double> u, std::vector<double> delta, std::vector<double> pi,
                                std::vector<double> losses = {});

 private:
  int n_ = 0;
  std::vector<double> u_;
  std::vector<double> delta_;
  std::vector<double> pi_;
  std::vector<double> loss_;
};

struct SuperadditivityResult {
  bool superadditive = true;
  // First (S, T) in scan order with Delta(S u T) < Delta(S) + Delta(T) - tol.
  std::optional<std::pair<Coalition, Coalition>> witness;
};

SuperadditivityResult is_superadditive(const GainReport& report);

}  // namespace fedstab
