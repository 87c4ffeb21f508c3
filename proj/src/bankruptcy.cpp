#include "fedbank/bankruptcy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace fedbank {

namespace {

constexpr double kEfficiencySlack = 1e-9;

// Aggregate sums are taken in sorted order so that every rule is exactly
// permutation-equivariant (the float total must not depend on creditor
// order).
double sorted_sum(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return std::accumulate(sorted.begin(), sorted.end(), 0.0);
}

void check_canonical(const BankruptcyProblem& p) {
  if (p.creditors.empty()) throw std::invalid_argument("no creditors");
  if (p.claims.size() != p.creditors.size()) {
    throw std::invalid_argument("claims/creditors length mismatch");
  }
  for (double d : p.claims) {
    if (!std::isfinite(d) || d < 0.0) {
      throw std::invalid_argument("claims must be finite and nonnegative");
    }
  }
  const double total = sorted_sum(p.claims);
  if (!std::isfinite(p.estate) || p.estate < 0.0) {
    throw std::invalid_argument("estate must be finite and nonnegative");
  }
  if (p.estate > total + kEfficiencySlack * std::max(1.0, total)) {
    throw std::invalid_argument("estate exceeds total claims (not canonical)");
  }
}

PayoutVector make_payout(std::vector<double> payouts, Rule rule) {
  PayoutVector pv;
  pv.payouts = std::move(payouts);
  pv.rule = rule;
  return pv;
}

}  // namespace

Rule rule_from_string(const std::string& name) {
  if (name == "proportional") return Rule::proportional;
  if (name == "cea") return Rule::cea;
  if (name == "cel") return Rule::cel;
  if (name == "talmud") return Rule::talmud;
  throw std::invalid_argument("unknown rule: " + name);
}

std::string to_string(Rule rule) {
  switch (rule) {
    case Rule::proportional: return "proportional";
    case Rule::cea: return "cea";
    case Rule::cel: return "cel";
    case Rule::talmud: return "talmud";
  }
  return "?";
}

double BankruptcyProblem::total_claims() const {
  return sorted_sum(claims);
}

std::pair<BankruptcyProblem, NormalizationLog> normalize_problem(
    double raw_estate, std::vector<double> raw_claims,
    std::vector<std::string> creditors) {
  if (creditors.empty()) throw std::invalid_argument("no creditors");
  if (raw_claims.size() != creditors.size()) {
    throw std::invalid_argument("claims/creditors length mismatch");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : creditors) {
    if (!seen.insert(id).second) {
      throw std::invalid_argument("duplicate creditor: " + id);
    }
  }
  if (!std::isfinite(raw_estate)) throw std::invalid_argument("non-finite input");
  for (double d : raw_claims) {
    if (!std::isfinite(d)) throw std::invalid_argument("non-finite input");
  }

  NormalizationLog log;
  log.raw_estate = raw_estate;
  log.raw_claims = raw_claims;

  BankruptcyProblem problem;
  problem.creditors = std::move(creditors);
  problem.claims = std::move(raw_claims);

  for (std::size_t i = 0; i < problem.claims.size(); ++i) {
    if (problem.claims[i] <= 0.0) {
      log.clamped_claims.push_back(problem.creditors[i]);
      log.notes.push_back("claim of " + problem.creditors[i] + " clamped to 0");
      problem.claims[i] = 0.0;
    }
  }

  double estate = raw_estate;
  if (estate < 0.0) {
    log.estate_clamped = true;
    log.notes.push_back("negative estate clamped to 0");
    estate = 0.0;
  }
  const double total = problem.total_claims();
  if (estate > total) {
    log.surplus = estate - total;
    log.notes.push_back("estate exceeds total claims; surplus recorded");
    estate = total;
  }
  problem.estate = estate;
  return {std::move(problem), std::move(log)};
}

double solve_level(std::span<const double> caps, double target) {
  const std::size_t n = caps.size();
  if (n == 0) throw std::invalid_argument("solve_level: empty caps");
  std::vector<double> sorted(caps.begin(), caps.end());
  std::sort(sorted.begin(), sorted.end());
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  const double slack = kEfficiencySlack * std::max(1.0, total);
  if (!(target >= -slack && target <= total + slack)) {
    throw std::invalid_argument("solve_level: target out of range");
  }
  const double clamped = std::clamp(target, 0.0, total);
  if (clamped == total) return sorted.back();  // full satisfaction, exactly

  double paid = 0.0;
  double level = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double remaining = static_cast<double>(n - i);
    const double step = (sorted[i] - level) * remaining;
    if (paid + step >= clamped) {
      return level + (clamped - paid) / remaining;
    }
    paid += step;
    level = sorted[i];
  }
  return sorted.back();  // target == sum(caps)
}

PayoutVector divide_proportional(const BankruptcyProblem& problem) {
  check_canonical(problem);
  const double total = problem.total_claims();
  std::vector<double> payouts(problem.size(), 0.0);
  if (total > 0.0) {
    for (std::size_t i = 0; i < payouts.size(); ++i) {
      payouts[i] = problem.estate * problem.claims[i] / total;
    }
  }
  return make_payout(std::move(payouts), Rule::proportional);
}

PayoutVector divide_cea(const BankruptcyProblem& problem) {
  check_canonical(problem);
  const double level = solve_level(problem.claims, problem.estate);
  std::vector<double> payouts(problem.size());
  for (std::size_t i = 0; i < payouts.size(); ++i) {
    payouts[i] = std::min(level, problem.claims[i]);
  }
  return make_payout(std::move(payouts), Rule::cea);
}

PayoutVector divide_cel(const BankruptcyProblem& problem) {
  check_canonical(problem);
  // sum_i max(d_i - mu, 0) = E  <=>  sum_i min(mu, d_i) = sum(d) - E
  const double loss_level =
      solve_level(problem.claims, problem.total_claims() - problem.estate);
  std::vector<double> payouts(problem.size());
  for (std::size_t i = 0; i < payouts.size(); ++i) {
    payouts[i] = std::max(problem.claims[i] - loss_level, 0.0);
  }
  return make_payout(std::move(payouts), Rule::cel);
}

PayoutVector divide_talmud(const BankruptcyProblem& problem) {
  check_canonical(problem);
  const std::size_t n = problem.size();
  std::vector<double> halves(n);
  for (std::size_t i = 0; i < n; ++i) halves[i] = problem.claims[i] / 2.0;
  const double half_total = sorted_sum(halves);

  std::vector<double> payouts(n);
  if (problem.estate <= half_total) {
    // CEA on half-claims.
    const double level = solve_level(halves, problem.estate);
    for (std::size_t i = 0; i < n; ++i) payouts[i] = std::min(level, halves[i]);
  } else {
    // Half-claims plus CEL on the remainder.
    const double remainder = problem.estate - half_total;
    const double loss_level = solve_level(halves, half_total - remainder);
    for (std::size_t i = 0; i < n; ++i) {
      payouts[i] = halves[i] + std::max(halves[i] - loss_level, 0.0);
    }
  }
  return make_payout(std::move(payouts), Rule::talmud);
}

PayoutVector divide_talmud_iterative(const BankruptcyProblem& problem) {
  check_canonical(problem);
  const std::size_t n = problem.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return problem.claims[a] < problem.claims[b];
  });

  std::vector<double> payouts(n, 0.0);
  double remaining = problem.estate;

  // Phase 1: raise everyone equally, retiring the lowest creditor each time
  // it reaches half its claim.
  double level = 0.0;
  std::size_t satisfied = 0;
  while (satisfied < n && remaining > 0.0) {
    const double active = static_cast<double>(n - satisfied);
    const double cap = problem.claims[order[satisfied]] / 2.0;
    const double step = (cap - level) * active;
    if (step >= remaining) {
      level += remaining / active;
      remaining = 0.0;
      break;
    }
    remaining -= step;
    level = cap;
    // Retire every creditor whose half-claim equals the current level.
    while (satisfied < n && problem.claims[order[satisfied]] / 2.0 <= level) {
      payouts[order[satisfied]] = problem.claims[order[satisfied]] / 2.0;
      ++satisfied;
    }
  }
  for (std::size_t k = satisfied; k < n; ++k) {
    payouts[order[k]] = level;
  }

  // Phase 2: everyone holds half; pay the largest losses down until the
  // estate is gone.
  if (remaining > 0.0) {
    double loss = problem.claims[order[n - 1]] / 2.0;
    std::size_t group = 1;  // creditors currently at the max loss, from the top
    while (remaining > 0.0 && loss > 0.0) {
      while (group < n &&
             problem.claims[order[n - 1 - group]] / 2.0 >= loss) {
        ++group;
      }
      const double next_loss =
          (group < n) ? problem.claims[order[n - 1 - group]] / 2.0 : 0.0;
      const double step = (loss - next_loss) * static_cast<double>(group);
      if (step >= remaining) {
        const double delta = remaining / static_cast<double>(group);
        for (std::size_t k = 0; k < group; ++k) payouts[order[n - 1 - k]] += delta;
        break;
      }
      for (std::size_t k = 0; k < group; ++k) {
        payouts[order[n - 1 - k]] += loss - next_loss;
      }
      remaining -= step;
      loss = next_loss;
    }
  }
  return make_payout(std::move(payouts), Rule::talmud);
}

PayoutVector divide(const BankruptcyProblem& problem, Rule rule) {
  switch (rule) {
    case Rule::proportional: return divide_proportional(problem);
    case Rule::cea: return divide_cea(problem);
    case Rule::cel: return divide_cel(problem);
    case Rule::talmud: return divide_talmud(problem);
  }
  throw std::invalid_argument("unknown rule");
}

AllocationOutcome allocate(double raw_estate, std::vector<double> raw_claims,
                           std::vector<std::string> creditors, Rule rule) {
  AllocationOutcome out;
  auto [problem, log] =
      normalize_problem(raw_estate, std::move(raw_claims), std::move(creditors));
  out.payout = divide(problem, rule);
  out.payout.clamped_claims = log.clamped_claims;

  if (log.surplus > 0.0) {
    std::vector<std::size_t> positive;
    for (std::size_t i = 0; i < problem.claims.size(); ++i) {
      if (problem.claims[i] > 0.0) positive.push_back(i);
    }
    if (positive.empty()) {
      out.undistributed = log.surplus;
      log.notes.push_back("no positive claims; surplus left undistributed");
    } else {
      const double share = log.surplus / static_cast<double>(positive.size());
      for (std::size_t i : positive) out.payout.payouts[i] += share;
      out.payout.surplus_paid = log.surplus;
    }
  }
  out.problem = std::move(problem);
  out.log = std::move(log);
  return out;
}

}  // namespace fedbank
