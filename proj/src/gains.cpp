#include "fedstab/gains.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include "fedstab/error.hpp"

namespace fedstab {

namespace {

double capped(double z, const char* what) {
  if (!(z <= kInverseLossCap)) {
    std::cerr << "warning: " << what << " exceeds " << kInverseLossCap << ", capping\n";
    return kInverseLossCap;
  }
  return z;
}

double inverse_loss(double loss) {
  if (loss <= 0.0) return capped(HUGE_VAL, "inverse expected loss");
  return capped(1.0 / loss, "inverse expected loss");
}

// f at z >= 0; z == 0 takes the right limit f(0+) = 0 for both kinds.
double gain_fn_eval_nonneg(const GainFnSpec& spec, double z) {
  if (z == 0.0) return 0.0;
  return gain_fn_eval(spec, z);
}

double coalition_cost(const Coalition& s, const Scenario& scenario) { return scenario.cost_per_agent * s.size(); }

double price_sum(Mask s, const std::vector<double>& pi) {
  double total = 0.0;
  for (Mask m = s; m != 0; m &= m - 1) total += pi[static_cast<std::size_t>(std::countr_zero(m))];
  return total;
}

}  // namespace

double gain_fn_eval(const GainFnSpec& spec, double z) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw DomainError("gain function argument must be finite and > 0, got " + std::to_string(z));
  }
  switch (spec.kind) {
    case GainFnKind::kLinear:
      return spec.scale * z;
    case GainFnKind::kLog:
      return spec.scale * std::log1p(z);
  }
  return 0.0;
}

double minimal_price(int agent, const Scenario& scenario) {
  if (agent < 0 || agent >= scenario.n) throw ContractError("agent index out of range");
  const auto& a = scenario.agents[static_cast<std::size_t>(agent)];
  if (a.reliability == 0.0) return 0.0;
  const double z = a.local_loss <= 0.0 ? capped(HUGE_VAL, "inverse local loss")
                                       : capped(a.reliability / a.local_loss, "inverse local loss");
  return gain_fn_eval_nonneg(scenario.gain_fn, z);
}

double cluster_gain(const Coalition& coalition, const Scenario& scenario) {
  if (coalition.is_empty()) return 0.0;
  if (coalition.size() == 1) return minimal_price(coalition.members().front(), scenario);
  return gain_fn_eval(scenario.gain_fn, inverse_loss(expected_loss(coalition, scenario))) -
         coalition_cost(coalition, scenario);
}

double marginal_gain(const Coalition& coalition, const Scenario& scenario) {
  if (coalition.size() <= 1) return 0.0;
  double prices = 0.0;
  for (int i : coalition.members()) prices += minimal_price(i, scenario);
  return cluster_gain(coalition, scenario) - prices;
}

GainReport GainReport::from_scenario(const Scenario& scenario) {
  require_subset_capacity(scenario.n);
  const int n = scenario.n;
  const std::size_t size = std::size_t{1} << n;
  std::vector<double> pi(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pi[static_cast<std::size_t>(i)] = minimal_price(i, scenario);

  std::vector<double> u(size, 0.0), delta(size, 0.0), loss(size, 0.0);
  for (Mask s = 1; s < size; ++s) {
    const Coalition c(s, n);
    loss[s] = expected_loss(c, scenario);
    if (c.size() == 1) {
      u[s] = pi[static_cast<std::size_t>(std::countr_zero(s))];
      continue;
    }
    u[s] = gain_fn_eval(scenario.gain_fn, inverse_loss(loss[s])) - coalition_cost(c, scenario);
    delta[s] = u[s] - price_sum(s, pi);
  }
  return from_tables(n, std::move(u), std::move(delta), std::move(pi), std::move(loss));
}

GainReport GainReport::from_marginal(int n, std::vector<double> delta, std::vector<double> pi) {
  require_subset_capacity(n);
  const std::size_t size = std::size_t{1} << n;
  if (delta.size() != size) throw ContractError("marginal table must have 2^n entries");
  if (pi.size() != static_cast<std::size_t>(n)) throw ContractError("price vector must have n entries");
  std::vector<double> u(size, 0.0);
  for (Mask s = 1; s < size; ++s) {
    if (std::popcount(s) == 1) {
      delta[s] = 0.0;
      u[s] = pi[static_cast<std::size_t>(std::countr_zero(s))];
    } else {
      u[s] = delta[s] + price_sum(s, pi);
    }
  }
  delta[0] = 0.0;
  return from_tables(n, std::move(u), std::move(delta), std::move(pi));
}

GainReport GainReport::from_tables(int n, std::vector<double> u, std::vector<double> delta, std::vector<double> pi,
                                   std::vector<double> losses) {
  require_subset_capacity(n);
  const std::size_t size = std::size_t{1} << n;
  if (u.size() != size || delta.size() != size) throw ContractError("gain tables must have 2^n entries");
  if (pi.size() != static_cast<std::size_t>(n)) throw ContractError("price vector must have n entries");
  if (!losses.empty() && losses.size() != size) throw ContractError("loss table must be empty or have 2^n entries");
  if (u[0] != 0.0 || delta[0] != 0.0) throw ContractError("u and Delta of the empty coalition must be 0");
  for (Mask s = 1; s < size; ++s) {
    if (!std::isfinite(u[s]) || !std::isfinite(delta[s])) throw ContractError("non-finite gain entry");
    if (std::popcount(s) == 1 && delta[s] != 0.0) throw ContractError("Delta of a singleton must be 0");
    const double expected = std::popcount(s) == 1 ? 0.0 : u[s] - price_sum(s, pi);
    if (std::abs(delta[s] - expected) > 1e-9 * std::max(1.0, std::abs(u[s]))) {
      throw ContractError("Delta(" + std::to_string(s) + ") disagrees with u - sum of prices");
    }
  }
  GainReport r;
  r.n_ = n;
  r.u_ = std::move(u);
  r.delta_ = std::move(delta);
  r.pi_ = std::move(pi);
  r.loss_ = std::move(losses);
  return r;
}

SuperadditivityResult is_superadditive(const GainReport& report) {
  const int n = report.population();
  if (n > kMaxSuperadditivityAgents) {
    throw CapacityError("superadditivity check supports n <= " + std::to_string(kMaxSuperadditivityAgents));
  }
  const Mask full = Coalition::grand(n).mask();
  for (Mask s = 1; s <= full; ++s) {
    const Mask rest = full & ~s;
    // Ascending non-empty submasks of the complement.
    for (Mask t = (0 - rest) & rest; t != 0; t = (t - rest) & rest) {
      if (report.delta(s | t) < report.delta(s) + report.delta(t) - kSuperadditivityTolerance) {
        return {false, std::make_pair(Coalition(s, n), Coalition(t, n))};
      }
    }
  }
  return {};
}

}  // namespace fedstab
