#include "fedbank/vflsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedbank/rng.hpp"

namespace fedbank {

namespace {

constexpr double kProbClamp = 1e-12;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_alignment(const PartyDataset& active,
                     std::span<const PartyDataset> passives) {
  if (active.role != PartyRole::active) {
    throw std::invalid_argument("first party must be active");
  }
  if (active.labels.size() != active.features.rows) {
    throw std::invalid_argument("active party labels misaligned");
  }
  for (const auto& p : passives) {
    if (p.role != PartyRole::passive) {
      throw std::invalid_argument("passive list contains an active party");
    }
    if (p.row_index != active.row_index) {
      throw std::invalid_argument("parties are not row-aligned");
    }
  }
}

}  // namespace

FederatedModel init_models(const PartyDataset& active,
                           std::span<const PartyDataset> passives,
                           std::uint64_t /*seed*/) {
  check_alignment(active, passives);
  FederatedModel model;
  model.party_order.push_back(active.party_id);
  model.weights[active.party_id] =
      std::vector<double>(active.features.cols, 0.0);
  for (const auto& p : passives) {
    model.party_order.push_back(p.party_id);
    model.weights[p.party_id] = std::vector<double>(p.features.cols, 0.0);
  }
  model.bias = 0.0;
  return model;
}

std::vector<double> partial_score(const PartyDataset& party,
                                  const FederatedModel& model,
                                  std::span<const std::size_t> batch_rows) {
  const auto it = model.weights.find(party.party_id);
  if (it == model.weights.end()) {
    throw std::invalid_argument("party not in model: " + party.party_id);
  }
  if (it->second.size() != party.features.cols) {
    throw std::invalid_argument("weight width mismatch for " + party.party_id);
  }
  const double bias = (party.role == PartyRole::active) ? model.bias : 0.0;
  std::vector<double> z(batch_rows.size());
  matvec_rows(party.features, batch_rows, it->second, bias, z);
  return z;
}

GradResult aggregate_and_grad(std::span<const std::vector<double>> partial_scores,
                              std::span<const double> labels) {
  if (partial_scores.empty()) throw std::invalid_argument("no partial scores");
  const std::size_t n = labels.size();
  for (const auto& z : partial_scores) {
    if (z.size() != n) throw std::invalid_argument("partial score length mismatch");
  }
  GradResult out;
  out.grad_z.resize(n);
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (const auto& zs : partial_scores) z += zs[i];
    const double p = sigmoid(z);
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    loss_sum -= labels[i] * std::log(pc) + (1.0 - labels[i]) * std::log(1.0 - pc);
    out.grad_z[i] = (p - labels[i]) / static_cast<double>(n);
  }
  out.loss = loss_sum / static_cast<double>(n);
  return out;
}

void local_update(const PartyDataset& party, FederatedModel& model,
                  std::span<const double> grad_z,
                  std::span<const std::size_t> batch_rows, double eta,
                  double l2) {
  auto it = model.weights.find(party.party_id);
  if (it == model.weights.end()) {
    throw std::invalid_argument("party not in model: " + party.party_id);
  }
  if (grad_z.size() != batch_rows.size()) {
    throw std::invalid_argument("gradient length mismatch");
  }
  apply_gradient(party.features, batch_rows, grad_z, eta, l2, it->second);
  if (party.role == PartyRole::active) {
    double g = 0.0;
    for (double v : grad_z) g += v;
    model.bias -= eta * g;
  }
}

std::vector<std::size_t> epoch_order(std::size_t n_rows, std::uint64_t seed,
                                     std::size_t round, bool shuffle_each_round) {
  std::vector<std::size_t> order(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) order[i] = i;
  const std::size_t effective_round = shuffle_each_round ? round : 0;
  Rng rng(Rng::mix(seed, effective_round));
  rng.shuffle(order);
  return order;
}

TrainResult train_observed(const PartyDataset& active,
                           std::span<const PartyDataset> passives,
                           const TrainingConfig& config,
                           const StepObserver& on_step) {
  check_alignment(active, passives);
  const std::size_t n = active.features.rows;
  if (n == 0) throw std::invalid_argument("empty training set");
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (config.rounds == 0) throw std::invalid_argument("rounds must be positive");
  if (!(config.learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be positive");
  }

  TrainResult result;
  result.model = init_models(active, passives, config.seed);
  FederatedModel& model = result.model;
  RoundTrace& trace = result.trace;

  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;

  for (std::size_t round = 0; round < config.rounds; ++round) {
    const auto order =
        epoch_order(n, config.seed, round, config.shuffle_each_round);
    double round_loss_sum = 0.0;

    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(begin + config.batch_size, n);
      const std::span<const std::size_t> rows(order.data() + begin, end - begin);

      std::vector<std::vector<double>> scores;
      scores.push_back(partial_score(active, model, rows));
      for (const auto& p : passives) {
        scores.push_back(partial_score(p, model, rows));
        ++trace.partial_score_messages;
        if (config.trace_messages) {
          trace.messages.push_back(
              {p.party_id, active.party_id, PayloadKind::partial_score, round, b});
        }
      }

      std::vector<double> batch_labels(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        batch_labels[i] = active.labels[rows[i]];
      }
      const GradResult grad = aggregate_and_grad(scores, batch_labels);
      if (!std::isfinite(grad.loss)) {
        throw std::runtime_error(
            "non-finite training loss at round " + std::to_string(round) +
            " (learning rate too high?)");
      }
      round_loss_sum += grad.loss * static_cast<double>(rows.size());

      for (const auto& p : passives) {
        ++trace.gradient_messages;
        if (config.trace_messages) {
          trace.messages.push_back(
              {active.party_id, p.party_id, PayloadKind::gradient, round, b});
        }
      }
      local_update(active, model, grad.grad_z, rows, config.learning_rate,
                   config.l2);
      for (const auto& p : passives) {
        local_update(p, model, grad.grad_z, rows, config.learning_rate,
                     config.l2);
      }
      ++trace.batch_steps;
      if (on_step) on_step(round, b, model);
    }
    trace.round_loss.push_back(round_loss_sum / static_cast<double>(n));
  }
  return result;
}

TrainResult train(const PartyDataset& active,
                  std::span<const PartyDataset> passives,
                  const TrainingConfig& config) {
  return train_observed(active, passives, config, nullptr);
}

double evaluate_f1(const FederatedModel& model, const PartyDataset& active_test,
                   std::span<const PartyDataset> passive_test) {
  check_alignment(active_test, passive_test);
  const std::size_t n = active_test.features.rows;
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;

  std::vector<double> z = partial_score(active_test, model, rows);
  for (const auto& p : passive_test) {
    const auto zp = partial_score(p, model, rows);
    for (std::size_t i = 0; i < n; ++i) z[i] += zp[i];
  }

  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool predicted = z[i] >= 0.0;  // sigmoid(z) >= 0.5
    const bool actual = active_test.labels[i] >= 0.5;
    if (predicted && actual) ++tp;
    else if (predicted && !actual) ++fp;
    else if (!predicted && actual) ++fn;
  }
  if (tp == 0 && fp == 0 && fn == 0) return 1.0;
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace fedbank
