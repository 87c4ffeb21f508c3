#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include <sstream>

#include "fedbank/data.hpp"
#include "fedbank/json_io.hpp"
#include "fedbank/rng.hpp"
#include "fedbank/vflsim.hpp"
#include "oracles.hpp"

using namespace fedbank;

namespace {

PartyDataset make_party(const std::string& id, PartyRole role, Matrix features,
                        std::vector<double> labels = {}) {
  PartyDataset p;
  p.party_id = id;
  p.role = role;
  p.features = std::move(features);
  p.labels = std::move(labels);
  p.row_index.resize(p.features.rows);
  std::iota(p.row_index.begin(), p.row_index.end(), 0);
  return p;
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (auto& v : m.data) v = rng.normal();
  return m;
}

// Random vertical federation over a shared random design matrix. Returns the
// parties plus the concatenated matrix and labels for the monolithic twin.
struct RandomFederation {
  std::vector<PartyDataset> parties;  // [0] active
  Matrix full;
  std::vector<double> labels;
};

RandomFederation random_federation(Rng& rng, std::size_t rows,
                                   std::size_t total_cols, int n_parties) {
  RandomFederation fed;
  fed.full = random_matrix(rng, rows, total_cols);
  fed.labels.resize(rows);
  for (auto& y : fed.labels) y = rng.uniform01() < 0.5 ? 0.0 : 1.0;

  // Random contiguous column blocks, some possibly empty.
  std::vector<std::size_t> cuts{0, total_cols};
  for (int k = 1; k < n_parties; ++k) cuts.push_back(rng.below(total_cols + 1));
  std::sort(cuts.begin(), cuts.end());

  for (int k = 0; k < n_parties; ++k) {
    const std::size_t lo = cuts[k], hi = cuts[k + 1];
    Matrix block(rows, hi - lo);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = lo; j < hi; ++j) block.at(i, j - lo) = fed.full.at(i, j);
    }
    if (k == 0) {
      fed.parties.push_back(
          make_party("active", PartyRole::active, std::move(block), fed.labels));
    } else {
      fed.parties.push_back(make_party("passive" + std::to_string(k),
                                       PartyRole::passive, std::move(block)));
    }
  }
  return fed;
}

std::vector<double> concatenated_theta(const FederatedModel& model) {
  std::vector<double> theta;
  for (const auto& id : model.party_order) {
    const auto& w = model.weights.at(id);
    theta.insert(theta.end(), w.begin(), w.end());
  }
  return theta;
}

}  // namespace

TEST_CASE("init_models: zero weights of the right widths") {
  Rng rng(3);
  auto fed = random_federation(rng, 8, 9, 3);
  const auto model = init_models(fed.parties[0], {fed.parties.begin() + 1, fed.parties.end()}, 1);
  CHECK(model.party_order.size() == 3);
  CHECK(model.bias == 0.0);
  std::size_t width = 0;
  for (const auto& [id, w] : model.weights) {
    width += w.size();
    for (double v : w) CHECK(v == 0.0);
  }
  CHECK(width == 9);
  // Repeated call gives the identical model.
  const auto again = init_models(fed.parties[0], {fed.parties.begin() + 1, fed.parties.end()}, 1);
  CHECK(again.weights == model.weights);
}

TEST_CASE("partial_score basics") {
  auto party = make_party("active", PartyRole::active, Matrix(2, 1), {1, 0});
  party.features.at(0, 0) = 3.0;
  party.features.at(1, 0) = -1.0;
  FederatedModel model;
  model.party_order = {"active"};
  model.weights["active"] = {2.0};
  model.bias = 0.0;
  const std::vector<std::size_t> rows{0, 1};
  const auto z = partial_score(party, model, rows);
  CHECK(z == std::vector<double>{6.0, -2.0});

  model.weights["active"] = {0.0};
  const auto zero = partial_score(party, model, rows);
  CHECK(zero == std::vector<double>{0.0, 0.0});
}

TEST_CASE("zero-width party contributes a constant zero score") {
  auto party = make_party("p", PartyRole::passive, Matrix(4, 0));
  FederatedModel model;
  model.party_order = {"p"};
  model.weights["p"] = {};
  const std::vector<std::size_t> rows{0, 1, 2, 3};
  CHECK(partial_score(party, model, rows) == std::vector<double>(4, 0.0));
}

TEST_CASE("partial scores of a vertical split sum to the monolithic product") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto fed = random_federation(rng, 6, 8, 2 + static_cast<int>(rng.below(3)));
    FederatedModel model =
        init_models(fed.parties[0], {fed.parties.begin() + 1, fed.parties.end()}, 0);
    std::vector<double> full_theta;
    for (const auto& id : model.party_order) {
      for (auto& w : model.weights[id]) {
        w = rng.normal();
        full_theta.push_back(w);
      }
    }
    model.bias = rng.normal();

    std::vector<std::size_t> rows{0, 2, 5};
    std::vector<double> sum(rows.size(), 0.0);
    for (const auto& party : fed.parties) {
      const auto z = partial_score(party, model, rows);
      for (std::size_t i = 0; i < rows.size(); ++i) sum[i] += z[i];
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double want = model.bias;
      for (std::size_t j = 0; j < fed.full.cols; ++j) {
        want += fed.full.at(rows[i], j) * full_theta[j];
      }
      CHECK(std::abs(sum[i] - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("aggregate_and_grad at zero scores gives ln 2 and centered gradient") {
  std::vector<std::vector<double>> scores{{0.0, 0.0}};
  const auto out = aggregate_and_grad(scores, std::vector<double>{1.0, 0.0});
  CHECK(out.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(out.grad_z[0] == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(out.grad_z[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("aggregate_and_grad saturates cleanly") {
  std::vector<std::vector<double>> scores{{500.0}};
  const auto out = aggregate_and_grad(scores, std::vector<double>{1.0});
  CHECK(out.loss == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(out.grad_z[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::isfinite(out.loss));
}

TEST_CASE("aggregate_and_grad matches central finite differences") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 5;
    std::vector<double> z(n), y(n);
    for (auto& v : z) v = rng.uniform(-3.0, 3.0);
    for (auto& v : y) v = rng.uniform01() < 0.5 ? 0.0 : 1.0;

    auto loss_at = [&](const std::vector<double>& zz) {
      std::vector<std::vector<double>> s{zz};
      return aggregate_and_grad(s, y).loss;
    };
    std::vector<std::vector<double>> s{z};
    const auto out = aggregate_and_grad(s, y);
    const double h = 1e-6;
    for (std::size_t i = 0; i < n; ++i) {
      auto zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      const double fd = (loss_at(zp) - loss_at(zm)) / (2.0 * h);
      CHECK(std::abs(out.grad_z[i] - fd) <=
            1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("local_update hand arithmetic") {
  auto party = make_party("p", PartyRole::passive, Matrix(1, 2));
  party.features.at(0, 0) = 1.0;
  party.features.at(0, 1) = 0.0;
  FederatedModel model;
  model.party_order = {"p"};
  model.weights["p"] = {0.0, 0.0};
  const std::vector<std::size_t> rows{0};
  const std::vector<double> grad{0.5};
  local_update(party, model, grad, rows, 0.1, 0.0);
  CHECK(model.weights["p"][0] == doctest::Approx(-0.05).epsilon(1e-15));
  CHECK(model.weights["p"][1] == 0.0);

  // Zero gradient leaves the model untouched.
  local_update(party, model, std::vector<double>{0.0}, rows, 0.1, 0.0);
  CHECK(model.weights["p"][0] == doctest::Approx(-0.05).epsilon(1e-15));
}

TEST_CASE("full-batch update equals the mean of per-sample updates") {
  Rng rng(11);
  auto party = make_party("p", PartyRole::passive, random_matrix(rng, 6, 3));
  std::vector<double> grad(6);
  for (auto& g : grad) g = rng.normal() / 6.0;
  std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};

  FederatedModel batch;
  batch.party_order = {"p"};
  batch.weights["p"] = {0.1, -0.2, 0.3};
  FederatedModel single = batch;

  local_update(party, batch, grad, rows, 0.5, 0.0);

  // Per-sample contributions summed by hand (grad already carries the 1/B).
  std::vector<double> acc = single.weights["p"];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      acc[j] -= 0.5 * party.features.at(rows[i], j) * grad[i];
    }
  }
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::abs(batch.weights["p"][j] - acc[j]) <= 1e-12);
  }
}

TEST_CASE("training with no passives is plain local logistic regression") {
  Rng rng(13);
  auto fed = random_federation(rng, 40, 5, 1);  // single active party
  TrainingConfig config;
  config.rounds = 7;
  config.batch_size = 16;
  config.seed = 99;

  const auto result = train(fed.parties[0], {}, config);

  // Monolithic twin replaying the same schedule.
  oracles::MonolithicModel mono;
  mono.theta.assign(fed.parties[0].features.cols, 0.0);
  for (std::size_t round = 0; round < config.rounds; ++round) {
    const auto order = epoch_order(40, config.seed, round, true);
    for (std::size_t b = 0; b * config.batch_size < order.size(); ++b) {
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(lo + config.batch_size, order.size());
      std::vector<std::size_t> rows(order.begin() + lo, order.begin() + hi);
      oracles::monolithic_sgd_step(fed.parties[0].features, fed.labels, rows,
                                   config.learning_rate, mono);
    }
  }
  const auto theta = concatenated_theta(result.model);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    CHECK(std::abs(theta[j] - mono.theta[j]) <= 1e-9);
  }
  CHECK(std::abs(result.model.bias - mono.bias) <= 1e-9);
}

TEST_CASE("keystone: federated SGD equals monolithic SGD after every step") {
  Rng rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t rows = 20 + rng.below(180);
    const std::size_t cols = 2 + rng.below(11);
    const int parties = 2 + static_cast<int>(rng.below(3));
    auto fed = random_federation(rng, rows, cols, parties);

    TrainingConfig config;
    config.rounds = 3;
    config.batch_size = 32;
    config.seed = 1000 + trial;

    oracles::MonolithicModel mono;
    mono.theta.assign(cols, 0.0);
    double max_diff = 0.0;

    std::size_t mono_round = 0, mono_batch = 0;
    std::vector<std::size_t> order;
    auto observer = [&](std::size_t round, std::size_t batch,
                        const FederatedModel& model) {
      if (round != mono_round || batch != mono_batch) return;  // keep in sync
      if (batch == 0) order = epoch_order(rows, config.seed, round, true);
      const std::size_t lo = batch * config.batch_size;
      const std::size_t hi = std::min(lo + config.batch_size, rows);
      std::vector<std::size_t> batch_rows(order.begin() + lo, order.begin() + hi);
      oracles::monolithic_sgd_step(fed.full, fed.labels, batch_rows,
                                   config.learning_rate, mono);
      const auto theta = concatenated_theta(model);
      for (std::size_t j = 0; j < theta.size(); ++j) {
        max_diff = std::max(max_diff, std::abs(theta[j] - mono.theta[j]));
      }
      max_diff = std::max(max_diff, std::abs(model.bias - mono.bias));
      ++mono_batch;
      if (hi == rows) {
        mono_batch = 0;
        ++mono_round;
      }
    };

    train_observed(fed.parties[0], {fed.parties.begin() + 1, fed.parties.end()},
                   config, observer);
    CAPTURE(trial);
    CHECK(max_diff <= 1e-9);
  }
}

TEST_CASE("analytic parameter gradient matches finite differences") {
  Rng rng(19);
  auto fed = random_federation(rng, 10, 4, 2);
  const auto& active = fed.parties[0];
  const auto& passive = fed.parties[1];
  std::vector<std::size_t> rows(10);
  std::iota(rows.begin(), rows.end(), 0);

  // Loss as a function of the concatenated parameters.
  auto loss_at = [&](const std::vector<double>& theta, double bias) {
    double loss = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double z = bias;
      for (std::size_t j = 0; j < fed.full.cols; ++j) {
        z += fed.full.at(i, j) * theta[j];
      }
      const double p = std::clamp(1.0 / (1.0 + std::exp(-z)), 1e-12, 1.0 - 1e-12);
      loss -= fed.labels[i] * std::log(p) + (1.0 - fed.labels[i]) * std::log(1.0 - p);
    }
    return loss / static_cast<double>(rows.size());
  };

  std::vector<double> theta(fed.full.cols);
  for (auto& t : theta) t = rng.uniform(-0.5, 0.5);
  const double bias = rng.uniform(-0.5, 0.5);

  // Analytic gradient via the federated pieces: eta = 1, so the parameter
  // delta equals -gradient.
  FederatedModel model;
  model.party_order = {active.party_id, passive.party_id};
  const std::size_t a_cols = active.features.cols;
  model.weights[active.party_id] =
      std::vector<double>(theta.begin(), theta.begin() + a_cols);
  model.weights[passive.party_id] =
      std::vector<double>(theta.begin() + a_cols, theta.end());
  model.bias = bias;

  std::vector<std::vector<double>> scores;
  scores.push_back(partial_score(active, model, rows));
  scores.push_back(partial_score(passive, model, rows));
  const auto grad = aggregate_and_grad(scores, active.labels);

  FederatedModel stepped = model;
  local_update(active, stepped, grad.grad_z, rows, 1.0, 0.0);
  local_update(passive, stepped, grad.grad_z, rows, 1.0, 0.0);

  const double h = 1e-6;
  std::size_t j = 0;
  for (const auto& id : model.party_order) {
    for (std::size_t k = 0; k < model.weights.at(id).size(); ++k, ++j) {
      auto tp = theta, tm = theta;
      tp[j] += h;
      tm[j] -= h;
      const double fd = (loss_at(tp, bias) - loss_at(tm, bias)) / (2.0 * h);
      const double analytic = model.weights.at(id)[k] - stepped.weights.at(id)[k];
      CHECK(std::abs(analytic - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
  const double fd_bias =
      (loss_at(theta, bias + h) - loss_at(theta, bias - h)) / (2.0 * h);
  CHECK(std::abs((model.bias - stepped.bias) - fd_bias) <=
        1e-5 * std::max(1.0, std::abs(fd_bias)));
}

TEST_CASE("separable toy federation converges to F1 = 1") {
  // Four points, two features, one per party; labels follow f1 + f2 > 0.
  Matrix a(4, 1), b(4, 1);
  a.at(0, 0) = 1.0;  b.at(0, 0) = 0.5;
  a.at(1, 0) = 0.8;  b.at(1, 0) = 1.0;
  a.at(2, 0) = -1.0; b.at(2, 0) = -0.3;
  a.at(3, 0) = -0.7; b.at(3, 0) = -1.0;
  auto active = make_party("a", PartyRole::active, std::move(a), {1, 1, 0, 0});
  auto passive = make_party("b", PartyRole::passive, std::move(b));

  TrainingConfig config;
  config.learning_rate = 0.5;
  config.rounds = 300;
  config.batch_size = 4;
  config.seed = 3;

  const auto result = train(active, {&passive, 1}, config);
  for (std::size_t t = 1; t < result.trace.round_loss.size(); ++t) {
    CHECK(result.trace.round_loss[t] <= result.trace.round_loss[t - 1] + 1e-12);
  }
  CHECK(evaluate_f1(result.model, active, {&passive, 1}) == 1.0);
}

TEST_CASE("training is bit-deterministic in the config seed") {
  Rng rng(23);
  auto fed = random_federation(rng, 50, 6, 3);
  TrainingConfig config;
  config.rounds = 5;
  config.batch_size = 16;
  config.seed = 77;
  const auto first = train(fed.parties[0], {fed.parties.begin() + 1, fed.parties.end()}, config);
  const auto second = train(fed.parties[0], {fed.parties.begin() + 1, fed.parties.end()}, config);
  CHECK(first.model.weights == second.model.weights);
  CHECK(first.model.bias == second.model.bias);
  CHECK(first.trace.round_loss == second.trace.round_loss);
}

TEST_CASE("epoch loss is non-increasing at a small learning rate") {
  const auto table = generate_synthetic(200, 6, 3, 0.3, 31);
  PartitionSpec spec;
  spec.active_party = "P_a";
  spec.label_column = "target";
  spec.parties.push_back({"P_a", {"f1", "f2", "f3"}});
  spec.parties.push_back({"P_h1", {"f4", "f5", "f6"}});
  auto split = train_test_split(vertical_partition(table, spec), 0.7, 5);
  standardize(split);

  TrainingConfig config;
  config.learning_rate = 0.01;
  config.rounds = 40;
  config.batch_size = 32;
  config.seed = 5;
  const auto result =
      train(split.train[0], {split.train.begin() + 1, split.train.end()}, config);
  for (std::size_t t = 1; t < result.trace.round_loss.size(); ++t) {
    CHECK(result.trace.round_loss[t] <= result.trace.round_loss[t - 1] + 1e-9);
  }
}

TEST_CASE("message discipline: passives see only their own gradient") {
  Rng rng(29);
  auto fed = random_federation(rng, 12, 6, 3);
  TrainingConfig config;
  config.rounds = 2;
  config.batch_size = 5;
  config.seed = 1;
  config.trace_messages = true;
  const auto result =
      train(fed.parties[0], {fed.parties.begin() + 1, fed.parties.end()}, config);
  const auto& trace = result.trace;

  const std::size_t batches = (12 + 4) / 5;
  CHECK(trace.batch_steps == config.rounds * batches);
  CHECK(trace.partial_score_messages == trace.batch_steps * 2);
  CHECK(trace.gradient_messages == trace.batch_steps * 2);

  std::map<std::pair<std::size_t, std::size_t>, std::map<std::string, int>> scores_seen;
  std::map<std::pair<std::size_t, std::size_t>, std::map<std::string, int>> grads_seen;
  for (const auto& msg : trace.messages) {
    if (msg.kind == PayloadKind::partial_score) {
      // Only passive -> active.
      CHECK(msg.receiver == "active");
      CHECK(msg.sender != "active");
      scores_seen[{msg.round, msg.batch}][msg.sender]++;
    } else {
      // Only active -> passive, one slice per passive.
      CHECK(msg.sender == "active");
      CHECK(msg.receiver != "active");
      grads_seen[{msg.round, msg.batch}][msg.receiver]++;
    }
  }
  CHECK(scores_seen.size() == trace.batch_steps);
  for (const auto& [step, senders] : scores_seen) {
    CHECK(senders.size() == 2);
    for (const auto& [id, count] : senders) CHECK(count == 1);
  }
  for (const auto& [step, receivers] : grads_seen) {
    CHECK(receivers.size() == 2);
    for (const auto& [id, count] : receivers) CHECK(count == 1);
  }
}

TEST_CASE("non-finite loss aborts with a diagnostic") {
  Matrix x(2, 1);
  x.at(0, 0) = 1e308;
  x.at(1, 0) = 0.0;
  auto active = make_party("a", PartyRole::active, std::move(x), {1, 0});
  TrainingConfig config;
  config.learning_rate = 10.0;
  config.rounds = 3;
  config.batch_size = 2;
  config.seed = 0;
  CHECK_THROWS_AS(train(active, {}, config), std::runtime_error);
}

TEST_CASE("train input validation") {
  auto active = make_party("a", PartyRole::active, Matrix(0, 2), {});
  TrainingConfig config;
  CHECK_THROWS_WITH_AS(train(active, {}, config), "empty training set",
                       std::invalid_argument);
}

TEST_CASE("evaluate_f1 conventions") {
  // Model that predicts sign(f1).
  Matrix x(4, 1);
  x.at(0, 0) = 2.0;
  x.at(1, 0) = 1.0;
  x.at(2, 0) = -1.0;
  x.at(3, 0) = -2.0;
  auto active = make_party("a", PartyRole::active, std::move(x), {1, 1, 0, 0});
  FederatedModel model;
  model.party_order = {"a"};
  model.weights["a"] = {1.0};
  model.bias = 0.0;
  CHECK(evaluate_f1(model, active, {}) == 1.0);

  model.weights["a"] = {-1.0};  // everything lands on the wrong side
  CHECK(evaluate_f1(model, active, {}) == 0.0);

  // TP=1, FP=1, FN=1 -> precision = recall = 0.5 -> F1 = 0.5.
  Matrix x2(3, 1);
  x2.at(0, 0) = 1.0;   // true 1, predicted 1: TP
  x2.at(1, 0) = 1.0;   // true 0, predicted 1: FP
  x2.at(2, 0) = -1.0;  // true 1, predicted 0: FN
  auto a2 = make_party("a", PartyRole::active, std::move(x2), {1, 0, 1});
  model.weights["a"] = {1.0};
  CHECK(evaluate_f1(model, a2, {}) == doctest::Approx(0.5).epsilon(1e-15));

  // All-negative predictions on all-negative truth: degenerate perfection.
  Matrix x3(2, 1);
  x3.at(0, 0) = -1.0;
  x3.at(1, 0) = -2.0;
  auto a3 = make_party("a", PartyRole::active, std::move(x3), {0, 0});
  CHECK(evaluate_f1(model, a3, {}) == 1.0);
}

TEST_CASE("round trace exports as JSON lines") {
  Rng rng(101);
  auto fed = random_federation(rng, 10, 4, 2);
  TrainingConfig config;
  config.rounds = 2;
  config.batch_size = 5;
  config.seed = 4;
  config.trace_messages = true;
  const auto result =
      train(fed.parties[0], {fed.parties.begin() + 1, fed.parties.end()}, config);
  const auto jsonl = fedbank::trace_to_jsonl(result.trace);

  std::istringstream in(jsonl);
  std::string line;
  std::size_t rounds = 0, messages = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);  // every line parses alone
    if (j.at("type") == "round") ++rounds;
    if (j.at("type") == "message") ++messages;
  }
  CHECK(rounds == 2);
  CHECK(messages == result.trace.messages.size());
  CHECK(messages == 2 * 2 * 2);  // rounds x batches x (score + gradient)
}

TEST_CASE("zero training rounds are rejected") {
  Rng rng(103);
  auto fed = random_federation(rng, 10, 4, 1);
  TrainingConfig config;
  config.rounds = 0;
  CHECK_THROWS_AS(train(fed.parties[0], {}, config), std::invalid_argument);
}

TEST_CASE("L2 regularization shrinks the learned weights") {
  Rng rng(107);
  auto fed = random_federation(rng, 60, 5, 2);
  TrainingConfig plain;
  plain.rounds = 20;
  plain.batch_size = 16;
  plain.seed = 8;
  TrainingConfig ridge = plain;
  ridge.l2 = 0.5;

  const auto free_fit =
      train(fed.parties[0], {fed.parties.begin() + 1, fed.parties.end()}, plain);
  const auto shrunk =
      train(fed.parties[0], {fed.parties.begin() + 1, fed.parties.end()}, ridge);
  auto norm = [](const FederatedModel& m) {
    double total = 0.0;
    for (const auto& [id, w] : m.weights) {
      for (double v : w) total += v * v;
    }
    return total;
  };
  CHECK(norm(shrunk.model) < norm(free_fit.model));
}
