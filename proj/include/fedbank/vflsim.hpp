#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fedbank/data.hpp"

namespace fedbank {

struct TrainingConfig {
  double learning_rate = 0.1;
  std::size_t rounds = 200;
  std::size_t batch_size = 64;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  bool shuffle_each_round = true;
  bool trace_messages = false;  // full message log; counters are always kept
};

enum class PayloadKind { partial_score, gradient };

struct Message {
  std::string sender;
  std::string receiver;
  PayloadKind kind;
  std::size_t round = 0;
  std::size_t batch = 0;
};

struct RoundTrace {
  std::vector<double> round_loss;  // sample-weighted mean BCE per round
  std::vector<Message> messages;   // populated iff trace_messages
  std::uint64_t partial_score_messages = 0;
  std::uint64_t gradient_messages = 0;
  std::uint64_t batch_steps = 0;
};

// Per-party linear pieces of one logistic model: prediction is
// sigmoid(bias + sum over parties of X^m theta^m).
struct FederatedModel {
  std::vector<std::string> party_order;  // active first, passives in call order
  std::map<std::string, std::vector<double>> weights;
  double bias = 0.0;
};

// All weights and the bias start at zero: the objective is convex, so the
// optimum path is deterministic and the seed only drives batch shuffling.
FederatedModel init_models(const PartyDataset& active,
                           std::span<const PartyDataset> passives,
                           std::uint64_t seed);

// z = X_batch theta^m for this party; the active party adds its bias.
std::vector<double> partial_score(const PartyDataset& party,
                                  const FederatedModel& model,
                                  std::span<const std::size_t> batch_rows);

struct GradResult {
  double loss = 0.0;
  std::vector<double> grad_z;  // (sigmoid(sum z) - y) / batch size
};

// Aggregates the parties' partial scores (fixed party order) and returns the
// batch-mean binary cross entropy plus the shared score gradient.
// Probabilities are clamped to [1e-12, 1-1e-12] inside the logs only.
GradResult aggregate_and_grad(std::span<const std::vector<double>> partial_scores,
                              std::span<const double> labels);

// theta^m -= eta * (X_batch^T grad_z + l2 * theta^m); the active party also
// steps its bias by eta * sum(grad_z).
void local_update(const PartyDataset& party, FederatedModel& model,
                  std::span<const double> grad_z,
                  std::span<const std::size_t> batch_rows, double eta,
                  double l2);

// Row order used for round `round`; shared with test oracles so an
// independent monolithic trainer can replay the exact batch schedule.
std::vector<std::size_t> epoch_order(std::size_t n_rows, std::uint64_t seed,
                                     std::size_t round, bool shuffle_each_round);

struct TrainResult {
  FederatedModel model;
  RoundTrace trace;
};

using StepObserver =
    std::function<void(std::size_t round, std::size_t batch, const FederatedModel&)>;

// Runs the full communication schedule: per batch, passive partial scores to
// the active party, aggregation, gradient broadcast, simultaneous local
// updates. Aborts on a non-finite loss. An empty passive span degenerates to
// the active party's plain local logistic regression.
TrainResult train(const PartyDataset& active,
                  std::span<const PartyDataset> passives,
                  const TrainingConfig& config);
TrainResult train_observed(const PartyDataset& active,
                           std::span<const PartyDataset> passives,
                           const TrainingConfig& config,
                           const StepObserver& on_step);

// F1 of class 1 on the test split at threshold 0.5. Degenerate cases:
// TP=FP=FN=0 gives 1, TP=0 with any FP/FN gives 0.
double evaluate_f1(const FederatedModel& model, const PartyDataset& active_test,
                   std::span<const PartyDataset> passive_test);

}  // namespace fedbank
