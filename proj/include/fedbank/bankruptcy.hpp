#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fedbank {

enum class Rule { proportional, cea, cel, talmud };

Rule rule_from_string(const std::string& name);
std::string to_string(Rule rule);

// A claims problem (E; d): estate E with 0 <= E <= sum(d), claims d >= 0,
// one claim per creditor. Claims are not required to be sorted; rules are
// value-determined, so creditor identity stays attached to its position.
struct BankruptcyProblem {
  std::vector<std::string> creditors;
  double estate = 0.0;
  std::vector<double> claims;

  std::size_t size() const { return creditors.size(); }
  double total_claims() const;
};

// Record of the adjustments normalize_problem made to reach the canonical
// form. `surplus` is the part of the raw estate above the total (clamped)
// claims; allocate() decides how it is paid out.
struct NormalizationLog {
  double raw_estate = 0.0;
  std::vector<double> raw_claims;
  bool estate_clamped = false;
  std::vector<std::string> clamped_claims;
  double surplus = 0.0;
  std::vector<std::string> notes;

  bool empty() const {
    return !estate_clamped && clamped_claims.empty() && surplus == 0.0;
  }
};

struct PayoutVector {
  std::vector<double> payouts;  // aligned with the problem's creditors
  Rule rule = Rule::talmud;
  double surplus_paid = 0.0;
  std::vector<std::string> clamped_claims;
};

// Clamps negative/zero claims to zero and a negative estate to zero, and, if
// the estate still exceeds the total claims, moves the overshoot into the
// log's surplus so the canonical condition E <= sum(d) holds.
std::pair<BankruptcyProblem, NormalizationLog> normalize_problem(
    double raw_estate, std::vector<double> raw_claims,
    std::vector<std::string> creditors);

PayoutVector divide_proportional(const BankruptcyProblem& problem);
PayoutVector divide_cea(const BankruptcyProblem& problem);
PayoutVector divide_cel(const BankruptcyProblem& problem);
PayoutVector divide_talmud(const BankruptcyProblem& problem);
PayoutVector divide(const BankruptcyProblem& problem, Rule rule);

// Literal transcription of the two-phase iterative procedure (fill everyone
// to half their claim lowest-first, then pay losses down highest-first).
// Kept alongside the half-claims decomposition as a cross-check; the two must
// agree to 1e-9 on every problem.
PayoutVector divide_talmud_iterative(const BankruptcyProblem& problem);

// Returns lambda with sum_i min(lambda, caps[i]) == target, solved exactly by
// a sorted breakpoint scan (the map lambda -> sum is piecewise affine).
// Requires 0 <= target <= sum(caps).
double solve_level(std::span<const double> caps, double target);

// normalize -> divide -> distribute any surplus. Surplus is paid on top of
// the fully met claims, split equally among creditors with positive claims;
// with no positive claims it stays undistributed.
struct AllocationOutcome {
  BankruptcyProblem problem;  // canonical problem that was solved
  PayoutVector payout;
  NormalizationLog log;
  double undistributed = 0.0;
};

AllocationOutcome allocate(double raw_estate, std::vector<double> raw_claims,
                           std::vector<std::string> creditors, Rule rule);

}  // namespace fedbank
