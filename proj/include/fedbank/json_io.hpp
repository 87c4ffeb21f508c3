#pragma once

#include <json.hpp>

#include "fedbank/coalitional.hpp"
#include "fedbank/pipeline.hpp"

namespace fedbank {

// Game wire format: {"n": 3, "values": {"0": 0.0, "1": ..., ...}} with
// coalition masks serialized as decimal strings.
nlohmann::json game_to_json(const CoalitionalGame& game);
CoalitionalGame game_from_json(const nlohmann::json& j);

// Standalone claims problem: {"estate": E, "claims": {"party": claim, ...},
// "rule": "talmud"}; creditor order is the (sorted) key order.
struct ProblemDocument {
  double estate = 0.0;
  std::vector<std::string> creditors;
  std::vector<double> claims;
  std::optional<Rule> rule;
};
ProblemDocument problem_from_json(const nlohmann::json& j);

nlohmann::json payout_to_json(const AllocationOutcome& outcome,
                              std::span<const std::string> creditors);

ExperimentConfig config_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const AllocationReport& report);

// One JSON object per line: a summary line, one line per round with its mean
// loss, and one line per logged message (when message tracing was on).
std::string trace_to_jsonl(const RoundTrace& trace);

}  // namespace fedbank
