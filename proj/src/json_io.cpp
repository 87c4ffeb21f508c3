#include "fedbank/json_io.hpp"

#include <stdexcept>

#include "fedbank/errors.hpp"

namespace fedbank {

using nlohmann::json;

json game_to_json(const CoalitionalGame& game) {
  json values = json::object();
  for (std::size_t mask = 0; mask < game.values.size(); ++mask) {
    values[std::to_string(mask)] = game.values[mask];
  }
  return json{{"n", game.n}, {"values", values}};
}

CoalitionalGame game_from_json(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("values")) {
    throw std::invalid_argument("game document needs 'n' and 'values'");
  }
  const int n = j.at("n").get<int>();
  if (n < 1) throw std::invalid_argument("game needs at least one player");
  if (n > CoalitionalGame::kMaxPlayers) {
    throw GuardError("exact Shapley table too large");
  }
  const std::size_t size = std::size_t{1} << n;
  std::vector<double> values(size, 0.0);
  std::vector<bool> present(size, false);
  for (const auto& [key, value] : j.at("values").items()) {
    std::size_t pos = 0;
    unsigned long mask = 0;
    try {
      mask = std::stoul(key, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad coalition mask: " + key);
    }
    if (pos != key.size() || mask >= size) {
      throw std::invalid_argument("bad coalition mask: " + key);
    }
    values[mask] = value.get<double>();
    present[mask] = true;
  }
  for (std::size_t mask = 0; mask < size; ++mask) {
    if (!present[mask]) {
      throw std::invalid_argument("coalition value missing for mask " +
                                  std::to_string(mask));
    }
  }
  return make_game(n, std::move(values));
}

ProblemDocument problem_from_json(const json& j) {
  if (!j.is_object() || !j.contains("estate") || !j.contains("claims")) {
    throw std::invalid_argument("problem document needs 'estate' and 'claims'");
  }
  ProblemDocument doc;
  doc.estate = j.at("estate").get<double>();
  const auto& claims = j.at("claims");
  if (!claims.is_object() || claims.empty()) {
    throw std::invalid_argument("'claims' must be a non-empty object");
  }
  for (const auto& [party, value] : claims.items()) {
    doc.creditors.push_back(party);
    doc.claims.push_back(value.get<double>());
  }
  if (j.contains("rule")) {
    doc.rule = rule_from_string(j.at("rule").get<std::string>());
  }
  return doc;
}

json payout_to_json(const AllocationOutcome& outcome,
                    std::span<const std::string> creditors) {
  json payouts = json::object();
  for (std::size_t i = 0; i < creditors.size(); ++i) {
    payouts[creditors[i]] = outcome.payout.payouts[i];
  }
  return json{{"payouts", payouts},
              {"rule", to_string(outcome.payout.rule)},
              {"surplus_paid", outcome.payout.surplus_paid},
              {"clamped_claims", outcome.payout.clamped_claims},
              {"estate", outcome.problem.estate},
              {"undistributed", outcome.undistributed},
              {"notes", outcome.log.notes}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig config;
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");

  const auto& dataset = j.at("dataset");
  if (dataset.contains("csv")) {
    config.csv_path = dataset.at("csv").get<std::string>();
  }
  if (dataset.contains("synthetic")) {
    const auto& sp = dataset.at("synthetic");
    SyntheticParams params;
    if (sp.contains("samples")) params.samples = sp.at("samples").get<std::size_t>();
    if (sp.contains("features")) params.features = sp.at("features").get<std::size_t>();
    if (sp.contains("informative")) {
      params.informative = sp.at("informative").get<std::size_t>();
    } else {
      params.informative = params.features / 2;
    }
    if (sp.contains("noise_sigma")) {
      params.noise_sigma = sp.at("noise_sigma").get<double>();
    }
    config.synthetic = params;
  }
  config.label_column = dataset.at("label").get<std::string>();

  const auto& partition = j.at("partition");
  config.partition.active_party = partition.at("active").get<std::string>();
  config.partition.label_column = config.label_column;
  for (const auto& entry : partition.at("parties")) {
    PartitionSpec::Entry e;
    e.party_id = entry.at("id").get<std::string>();
    for (const auto& col : entry.at("columns")) {
      e.columns.push_back(col.get<std::string>());
    }
    config.partition.parties.push_back(std::move(e));
  }

  if (j.contains("training")) {
    const auto& t = j.at("training");
    if (t.contains("learning_rate")) {
      config.training.learning_rate = t.at("learning_rate").get<double>();
    }
    if (t.contains("rounds")) config.training.rounds = t.at("rounds").get<std::size_t>();
    if (t.contains("batch_size")) {
      config.training.batch_size = t.at("batch_size").get<std::size_t>();
    }
    if (t.contains("l2")) config.training.l2 = t.at("l2").get<double>();
    if (t.contains("shuffle_each_round")) {
      config.training.shuffle_each_round = t.at("shuffle_each_round").get<bool>();
    }
  }
  if (j.contains("split_ratio")) config.split_ratio = j.at("split_ratio").get<double>();
  if (j.contains("rule")) {
    config.rule = rule_from_string(j.at("rule").get<std::string>());
  }
  if (j.contains("variant")) {
    const auto& v = j.at("variant");
    const std::string kind = v.at("kind").get<std::string>();
    if (kind == "plain") {
      config.variant.kind = ExperimentVariant::Kind::plain;
    } else if (kind == "dummy") {
      config.variant.kind = ExperimentVariant::Kind::dummy;
      config.variant.party = v.at("party").get<std::string>();
    } else if (kind == "symmetry") {
      config.variant.kind = ExperimentVariant::Kind::symmetry;
      config.variant.source = v.at("source").get<std::string>();
      config.variant.target = v.at("target").get<std::string>();
    } else {
      throw std::invalid_argument("unknown variant kind: " + kind);
    }
  }
  if (j.contains("shapley")) config.shapley = j.at("shapley").get<bool>();
  if (j.contains("budget")) config.budget = j.at("budget").get<double>();
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("description")) {
    config.description = j.at("description").get<std::string>();
  } else {
    config.description = config.csv_path ? *config.csv_path : "synthetic";
  }
  return config;
}

std::string trace_to_jsonl(const RoundTrace& trace) {
  std::string out;
  out += json{{"type", "summary"},
              {"batch_steps", trace.batch_steps},
              {"partial_score_messages", trace.partial_score_messages},
              {"gradient_messages", trace.gradient_messages}}
             .dump() +
         "\n";
  for (std::size_t r = 0; r < trace.round_loss.size(); ++r) {
    out += json{{"type", "round"}, {"round", r}, {"loss", trace.round_loss[r]}}
               .dump() +
           "\n";
  }
  for (const auto& m : trace.messages) {
    out += json{{"type", "message"},
                {"round", m.round},
                {"batch", m.batch},
                {"sender", m.sender},
                {"receiver", m.receiver},
                {"payload", m.kind == PayloadKind::partial_score ? "partial_score"
                                                                 : "gradient"}}
               .dump() +
           "\n";
  }
  return out;
}

json report_to_json(const AllocationReport& report) {
  json coalitions = json::object();
  for (const auto& [mask, f1] : report.scores.by_coalition) {
    coalitions[std::to_string(mask)] = f1;
  }
  json j{{"description", report.description},
         {"parties", report.parties},
         {"f1", json{{"baseline", report.scores.baseline},
                     {"coalitions", coalitions}}},
         {"estate_raw", report.estate_raw},
         {"estate", report.estate},
         {"claims_raw", report.claims_raw},
         {"claims", report.claims},
         {"payouts", report.payouts},
         {"payout_percent", report.payout_percent},
         {"rule", to_string(report.rule)},
         {"surplus_paid", report.surplus_paid},
         {"undistributed", report.undistributed},
         {"clamped_claims", report.clamped_claims},
         {"federation_beneficial", report.federation_beneficial},
         {"normalization",
          json{{"estate_clamped", report.normalization.estate_clamped},
               {"notes", report.normalization.notes}}},
         {"training", json{{"learning_rate", report.training.learning_rate},
                           {"rounds", report.training.rounds},
                           {"batch_size", report.training.batch_size},
                           {"l2", report.training.l2},
                           {"seed", report.training.seed},
                           {"shuffle_each_round", report.training.shuffle_each_round}}},
         {"split_ratio", report.split_ratio},
         {"variant", report.variant_desc},
         {"seed", report.seed},
         {"models_trained", report.models_trained}};
  if (report.shapley) j["shapley"] = *report.shapley;
  if (report.budget) {
    j["budget"] = *report.budget;
    j["budget_shares"] = *report.budget_shares;
    j["budget_unspent"] = report.budget_unspent;
  }
  return j;
}

}  // namespace fedbank
