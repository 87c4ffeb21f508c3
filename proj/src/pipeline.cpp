#include "fedbank/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fedbank/errors.hpp"
#include "fedbank/json_io.hpp"
#include "fedbank/rng.hpp"

namespace fedbank {

namespace {

// Sub-seed streams carved out of the config seed.
enum SeedStream : std::uint64_t {
  kDataStream = 1,
  kVariantStream = 2,
  kSplitStream = 3,
  kTrainingStream = 4,
};

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("[") + name + "] " + e.what());
  }
}

}  // namespace

double compute_estate(const CoalitionScores& scores) {
  const std::uint32_t grand = (1u << scores.n) - 1;
  auto it = scores.by_coalition.find(grand);
  if (it == scores.by_coalition.end()) {
    throw std::invalid_argument("grand coalition score missing");
  }
  return (it->second - scores.baseline) * 100.0;
}

std::vector<double> compute_claims(const CoalitionScores& scores) {
  std::vector<double> claims;
  for (int i = 0; i < scores.n; ++i) {
    auto it = scores.by_coalition.find(1u << i);
    if (it == scores.by_coalition.end()) {
      throw std::invalid_argument("singleton coalition score missing for party " +
                                  std::to_string(i));
    }
    claims.push_back((it->second - scores.baseline) * 100.0);
  }
  return claims;
}

CoalitionalGame characteristic_from_scores(const CoalitionScores& scores) {
  const std::uint32_t size = 1u << scores.n;
  std::vector<double> values(size, 0.0);
  for (std::uint32_t mask = 1; mask < size; ++mask) {
    auto it = scores.by_coalition.find(mask);
    if (it == scores.by_coalition.end()) {
      throw std::invalid_argument("coalition score missing for mask " +
                                  std::to_string(mask));
    }
    values[mask] = (it->second - scores.baseline) * 100.0;
  }
  values[0] = 0.0;
  return make_game(scores.n, std::move(values));
}

std::vector<double> budget_split(std::span<const double> payouts, double estate,
                                 double budget) {
  if (!(estate > 0.0)) throw std::invalid_argument("estate must be positive");
  if (budget < 0.0) throw std::invalid_argument("budget must be nonnegative");
  std::vector<double> shares(payouts.size());
  for (std::size_t i = 0; i < payouts.size(); ++i) {
    shares[i] = budget * payouts[i] / estate;
  }
  return shares;
}

AllocationReport run_experiment(const ExperimentConfig& config) {
  if (config.csv_path.has_value() == config.synthetic.has_value()) {
    throw std::invalid_argument(
        "config must name exactly one of csv dataset or synthetic params");
  }

  Table raw = stage("data", [&] {
    if (config.csv_path) {
      return load_csv(*config.csv_path, config.label_column);
    }
    const auto& sp = *config.synthetic;
    return generate_synthetic(sp.samples, sp.features, sp.informative,
                              sp.noise_sigma, Rng::mix(config.seed, kDataStream));
  });

  Table encoded = stage("preprocess", [&] { return preprocess(raw); });

  std::vector<PartyDataset> parties = stage(
      "partition", [&] { return vertical_partition(encoded, config.partition); });

  auto find_party = [&](const std::string& id) -> std::size_t {
    for (std::size_t i = 0; i < parties.size(); ++i) {
      if (parties[i].party_id == id) return i;
    }
    throw std::invalid_argument("unknown party: " + id);
  };

  std::string variant_desc = "plain";
  stage("variant", [&] {
    switch (config.variant.kind) {
      case ExperimentVariant::Kind::plain:
        break;
      case ExperimentVariant::Kind::dummy: {
        const std::size_t i = find_party(config.variant.party);
        parties[i] =
            randomize_party(parties[i], Rng::mix(config.seed, kVariantStream));
        variant_desc = "dummy(" + config.variant.party + ")";
        break;
      }
      case ExperimentVariant::Kind::symmetry: {
        const std::size_t src = find_party(config.variant.source);
        const std::size_t dst = find_party(config.variant.target);
        if (src == dst) {
          throw std::invalid_argument("symmetry source and target must differ");
        }
        std::vector<PartyDataset> others;
        for (std::size_t i = 0; i < parties.size(); ++i) {
          if (i != dst) others.push_back(parties[i]);
        }
        const std::size_t src_in_others = src < dst ? src : src - 1;
        parties[dst] = duplicate_party(others[src_in_others],
                                       config.variant.target, others);
        variant_desc =
            "symmetry(" + config.variant.source + "->" + config.variant.target + ")";
        break;
      }
    }
    return 0;
  });

  SplitParties split = stage("split", [&] {
    auto s = train_test_split(parties, config.split_ratio,
                              Rng::mix(config.seed, kSplitStream));
    standardize(s);
    return s;
  });

  // Passive parties in partition order; the active party leads both splits.
  std::size_t active_idx = find_party(config.partition.active_party);
  std::vector<std::size_t> passive_idx;
  for (std::size_t i = 0; i < parties.size(); ++i) {
    if (i != active_idx) passive_idx.push_back(i);
  }
  const int n = static_cast<int>(passive_idx.size());
  if (n < 1) throw std::invalid_argument("need at least one passive party");
  if (n > CoalitionalGame::kMaxPlayers) {
    throw GuardError("exact Shapley table too large");
  }

  TrainingConfig training = config.training;
  training.seed = Rng::mix(config.seed, kTrainingStream);

  CoalitionScores scores;
  scores.n = n;
  std::size_t models_trained = 0;

  std::map<std::uint32_t, double> f1_cache;
  auto coalition_f1 = [&](std::uint32_t mask) -> double {
    auto it = f1_cache.find(mask);
    if (it != f1_cache.end()) return it->second;
    std::vector<PartyDataset> train_passives;
    std::vector<PartyDataset> test_passives;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        train_passives.push_back(split.train[passive_idx[i]]);
        test_passives.push_back(split.test[passive_idx[i]]);
      }
    }
    const auto result =
        train(split.train[active_idx], train_passives, training);
    const double f1 =
        evaluate_f1(result.model, split.test[active_idx], test_passives);
    ++models_trained;
    f1_cache.emplace(mask, f1);
    return f1;
  };

  const std::uint32_t grand = (1u << n) - 1;
  stage("train", [&] {
    scores.baseline = coalition_f1(0);
    for (int i = 0; i < n; ++i) coalition_f1(1u << i);
    coalition_f1(grand);
    if (config.shapley) {
      for (std::uint32_t mask = 0; mask <= grand; ++mask) coalition_f1(mask);
    }
    scores.by_coalition = f1_cache;
    return 0;
  });

  AllocationReport report;
  report.description = config.description;
  for (std::size_t i : passive_idx) report.parties.push_back(parties[i].party_id);
  report.scores = scores;
  report.rule = config.rule;
  report.training = training;
  report.split_ratio = config.split_ratio;
  report.variant_desc = variant_desc;
  report.seed = config.seed;
  report.models_trained = models_trained;

  stage("allocate", [&] {
    report.estate_raw = compute_estate(scores);
    report.claims_raw = compute_claims(scores);
    AllocationOutcome outcome = allocate(report.estate_raw, report.claims_raw,
                                         report.parties, config.rule);
    report.estate = outcome.problem.estate;
    report.claims = outcome.problem.claims;
    report.payouts = outcome.payout.payouts;
    report.surplus_paid = outcome.payout.surplus_paid;
    report.undistributed = outcome.undistributed;
    report.clamped_claims = outcome.payout.clamped_claims;
    report.normalization = outcome.log;
    report.federation_beneficial = report.estate_raw > 0.0;

    const double effective_estate =
        report.estate + report.surplus_paid + report.undistributed;
    report.payout_percent.assign(report.payouts.size(), 0.0);
    if (effective_estate > 0.0) {
      for (std::size_t i = 0; i < report.payouts.size(); ++i) {
        report.payout_percent[i] = 100.0 * report.payouts[i] / effective_estate;
      }
    }

    if (config.shapley) {
      report.shapley = shapley_exact(characteristic_from_scores(scores));
    }
    if (config.budget) {
      report.budget = config.budget;
      if (effective_estate > 0.0) {
        report.budget_shares =
            budget_split(report.payouts, effective_estate, *config.budget);
        double spent = 0.0;
        for (double s : *report.budget_shares) spent += s;
        report.budget_unspent = *config.budget - spent;
      } else {
        report.budget_shares = std::vector<double>(report.payouts.size(), 0.0);
        report.budget_unspent = *config.budget;
      }
    }
    return 0;
  });

  return report;
}

std::string report_to_markdown(const AllocationReport& report) {
  std::ostringstream md;
  md << "# Incentive allocation report\n\n";

  md << "| Description | Estate |";
  for (const auto& p : report.parties) md << " Claim " << p << " |";
  for (const auto& p : report.parties) md << " Payout " << p << " |";
  if (report.shapley) {
    for (const auto& p : report.parties) md << " Shapley " << p << " |";
  }
  md << "\n|---|---:|";
  for (std::size_t i = 0; i < report.parties.size(); ++i) md << "---:|";
  for (std::size_t i = 0; i < report.parties.size(); ++i) md << "---:|";
  if (report.shapley) {
    for (std::size_t i = 0; i < report.parties.size(); ++i) md << "---:|";
  }
  md << "\n| " << report.description << " | " << fmt2(report.estate_raw) << " |";
  for (double c : report.claims_raw) md << " " << fmt2(c) << " |";
  for (double p : report.payouts) md << " " << fmt2(p) << " |";
  if (report.shapley) {
    for (double s : *report.shapley) md << " " << fmt2(s) << " |";
  }
  md << "\n\n";

  md << "- rule: " << to_string(report.rule) << "\n";
  md << "- variant: " << report.variant_desc << "\n";
  md << "- baseline F1: " << fmt2(report.scores.baseline * 100.0)
     << "%, federated F1: "
     << fmt2(report.scores.by_coalition.at((1u << report.scores.n) - 1) * 100.0)
     << "%\n";
  md << "- models trained: " << report.models_trained << "\n";
  md << "- seed: " << report.seed << "\n";
  if (!report.federation_beneficial) {
    md << "- **federation not beneficial** (estate clamped to 0; no payouts)\n";
  }
  for (const auto& note : report.normalization.notes) {
    md << "- note: " << note << "\n";
  }
  if (report.surplus_paid > 0.0) {
    md << "- surplus paid beyond claims: " << fmt2(report.surplus_paid) << "\n";
  }
  if (report.undistributed > 0.0) {
    md << "- undistributed estate: " << fmt2(report.undistributed) << "\n";
  }
  if (report.budget) {
    md << "- budget " << fmt2(*report.budget) << " split:";
    for (std::size_t i = 0; i < report.parties.size(); ++i) {
      md << " " << report.parties[i] << " " << fmt2((*report.budget_shares)[i])
         << " (" << fmt2(report.payout_percent[i]) << "%)";
      if (i + 1 < report.parties.size()) md << ",";
    }
    md << "\n";
    if (report.budget_unspent > 0.0) {
      md << "- budget unspent: " << fmt2(report.budget_unspent) << "\n";
    }
  }
  return md.str();
}

std::string report_to_csv(const AllocationReport& report) {
  std::ostringstream csv;
  csv << "description,estate";
  for (const auto& p : report.parties) csv << ",claim_" << p;
  for (const auto& p : report.parties) csv << ",payout_" << p;
  if (report.shapley) {
    for (const auto& p : report.parties) csv << ",shapley_" << p;
  }
  csv << "\n" << report.description << "," << fmt2(report.estate_raw);
  for (double c : report.claims_raw) csv << "," << fmt2(c);
  for (double p : report.payouts) csv << "," << fmt2(p);
  if (report.shapley) {
    for (double s : *report.shapley) csv << "," << fmt2(s);
  }
  csv << "\n";
  return csv.str();
}

void write_report_files(const AllocationReport& report,
                        const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write_atomic = [&](const std::string& name, const std::string& content) {
    const auto tmp = out_dir / (name + ".tmp");
    const auto final_path = out_dir / name;
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
      out << content;
    }
    std::filesystem::rename(tmp, final_path);
  };
  write_atomic("report.json", report_to_json(report).dump(2) + "\n");
  write_atomic("report.md", report_to_markdown(report));
  write_atomic("report.csv", report_to_csv(report));
}

}  // namespace fedbank
