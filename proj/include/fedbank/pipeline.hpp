#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedbank/bankruptcy.hpp"
#include "fedbank/coalitional.hpp"
#include "fedbank/data.hpp"
#include "fedbank/vflsim.hpp"

namespace fedbank {

// F1 scores of the coalition models. Masks index subsets of the passive
// parties (bit i = passive party at position i); mask 0 is the active party
// alone and must equal `baseline`.
struct CoalitionScores {
  int n = 0;
  double baseline = 0.0;
  std::map<std::uint32_t, double> by_coalition;
};

// (F1 of the grand coalition - baseline) in percentage points.
double compute_estate(const CoalitionScores& scores);

// Claim of passive party i: (F1 of the pair model - baseline) in percentage
// points. Requires every singleton coalition.
std::vector<double> compute_claims(const CoalitionScores& scores);

// v(S) = (F1(S) - baseline) * 100 with v(empty) forced to 0. Requires the
// complete 2^n score table.
CoalitionalGame characteristic_from_scores(const CoalitionScores& scores);

// share_i = budget * payout_i / estate. Undistributed estate leaves part of
// the budget unspent by construction. Requires estate > 0.
std::vector<double> budget_split(std::span<const double> payouts, double estate,
                                 double budget);

struct ExperimentVariant {
  enum class Kind { plain, dummy, symmetry };
  Kind kind = Kind::plain;
  std::string party;   // dummy: the party whose data is randomized
  std::string source;  // symmetry: party whose data is copied
  std::string target;  // symmetry: party that receives the copy
};

struct SyntheticParams {
  std::size_t samples = 10000;
  std::size_t features = 20;
  std::size_t informative = 10;
  double noise_sigma = 0.5;
};

struct ExperimentConfig {
  std::string description;
  std::optional<std::string> csv_path;
  std::optional<SyntheticParams> synthetic;
  std::string label_column;
  PartitionSpec partition;
  TrainingConfig training;
  double split_ratio = 0.7;
  Rule rule = Rule::talmud;
  ExperimentVariant variant;
  bool shapley = false;
  std::optional<double> budget;
  std::uint64_t seed = 0;
};

struct AllocationReport {
  std::string description;
  std::vector<std::string> parties;  // passive parties, partition order

  CoalitionScores scores;
  double estate_raw = 0.0;  // can be negative when federation does not help
  double estate = 0.0;      // canonical estate handed to the division rule
  std::vector<double> claims_raw;
  std::vector<double> claims;  // clamped claims of the canonical problem
  std::vector<double> payouts;
  std::vector<double> payout_percent;
  Rule rule = Rule::talmud;
  double surplus_paid = 0.0;
  double undistributed = 0.0;
  std::vector<std::string> clamped_claims;
  bool federation_beneficial = true;
  NormalizationLog normalization;

  std::optional<std::vector<double>> shapley;
  std::optional<double> budget;
  std::optional<std::vector<double>> budget_shares;
  double budget_unspent = 0.0;

  TrainingConfig training;  // echo, with the derived seed actually used
  double split_ratio = 0.7;
  std::string variant_desc;
  std::uint64_t seed = 0;
  std::size_t models_trained = 0;
};

// Full experiment: load/generate -> preprocess -> partition -> variant ->
// split -> standardize -> train the needed coalitions (n+2 models for the
// payout path, all 2^n when shapley is on; cached by mask) -> allocate.
// Every random choice derives from config.seed.
AllocationReport run_experiment(const ExperimentConfig& config);

std::string report_to_markdown(const AllocationReport& report);
std::string report_to_csv(const AllocationReport& report);

// Writes report.json / report.md / report.csv atomically (temp + rename).
void write_report_files(const AllocationReport& report,
                        const std::filesystem::path& out_dir);

}  // namespace fedbank
