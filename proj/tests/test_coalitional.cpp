#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <numeric>

#include "fedbank/coalitional.hpp"
#include "fedbank/errors.hpp"
#include "fedbank/json_io.hpp"
#include "oracles.hpp"

using namespace fedbank;

namespace {

BankruptcyProblem problem(double estate, std::vector<double> claims) {
  BankruptcyProblem p;
  p.estate = estate;
  p.claims = std::move(claims);
  for (std::size_t i = 0; i < p.claims.size(); ++i) {
    p.creditors.push_back("p" + std::to_string(i + 1));
  }
  return p;
}

CoalitionalGame random_game(Rng& rng, int n) {
  std::vector<double> values(std::size_t{1} << n, 0.0);
  for (std::size_t mask = 1; mask < values.size(); ++mask) {
    values[mask] = rng.uniform(-10.0, 50.0);
  }
  return make_game(n, std::move(values));
}

}  // namespace

TEST_CASE("two-player Shapley formula") {
  auto game = make_game(2, {0.0, 1.0, 2.0, 4.0});
  const auto phi = shapley_exact(game);
  CHECK(phi[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(phi[1] == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("Shapley of the worked bankruptcy game") {
  const auto game = bankruptcy_game(problem(200, {100, 200, 300}));
  const auto phi = shapley_exact(game);
  CHECK(std::abs(phi[0] - 100.0 / 3.0) <= 0.01);
  CHECK(std::abs(phi[1] - 250.0 / 3.0) <= 0.01);
  CHECK(std::abs(phi[2] - 250.0 / 3.0) <= 0.01);
  // Cross-check against the all-orderings oracle.
  const auto want = oracles::shapley_permutations(game);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(phi[i] - want[i]) <= 1e-9);
}

TEST_CASE("dummy players get exactly zero") {
  // Player 2 contributes nothing to any coalition.
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto base = random_game(rng, 2);
    std::vector<double> values(8, 0.0);
    for (std::uint32_t mask = 0; mask < 4; ++mask) {
      values[mask] = base.values[mask];
      values[mask | 4u] = base.values[mask];
    }
    const auto phi = shapley_exact(make_game(3, std::move(values)));
    CHECK(phi[2] == 0.0);
  }
}

TEST_CASE("Shapley axioms on random games") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));  // up to 6 players
    auto game = random_game(rng, n);

    // Efficiency.
    const auto phi = shapley_exact(game);
    const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
    CHECK(std::abs(total - game.values[game.grand()]) <= 1e-9);

    // Additivity.
    auto other = random_game(rng, n);
    std::vector<double> sum_values(game.values.size());
    for (std::size_t k = 0; k < sum_values.size(); ++k) {
      sum_values[k] = game.values[k] + other.values[k];
    }
    const auto phi_other = shapley_exact(other);
    const auto phi_sum = shapley_exact(make_game(n, std::move(sum_values)));
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(phi_sum[i] - (phi[i] + phi_other[i])) <= 1e-9);
    }

    // Symmetry: make players 0 and 1 interchangeable by symmetrizing the
    // table under the 0<->1 swap.
    auto sym = game;
    for (std::uint32_t mask = 0; mask < sym.values.size(); ++mask) {
      if ((mask & 1u) && !(mask & 2u)) {
        const std::uint32_t swapped = (mask & ~3u) | 2u;
        sym.values[swapped] = sym.values[mask];
      }
    }
    const auto phi_sym = shapley_exact(sym);
    CHECK(std::abs(phi_sym[0] - phi_sym[1]) <= 1e-9);
  }
}

TEST_CASE("parallel Shapley is bit-identical to the serial reference") {
  Rng rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const auto game = random_game(rng, 2 + static_cast<int>(rng.below(7)));
    CHECK(shapley_exact(game) == shapley_exact_serial(game));
  }
}

TEST_CASE("bankruptcy game construction") {
  const auto game = bankruptcy_game(problem(200, {100, 200, 300}));
  CHECK(game.values[0] == 0.0);
  CHECK(game.values[4] == 0.0);          // {p3}
  CHECK(game.values[6] == 100.0);        // {p2, p3}
  CHECK(game.values[7] == 200.0);        // grand
  CHECK(game.values[3] == 0.0);          // {p1, p2}: 200 - 300 < 0

  const auto zero = bankruptcy_game(problem(0, {1, 2, 3}));
  for (double v : zero.values) CHECK(v == 0.0);

  // E = sum(d): additive game.
  const auto full = bankruptcy_game(problem(600, {100, 200, 300}));
  CHECK(full.values[1] == doctest::Approx(100).epsilon(1e-12));
  CHECK(full.values[3] == doctest::Approx(300).epsilon(1e-12));
  CHECK(full.values[7] == doctest::Approx(600).epsilon(1e-12));
}

TEST_CASE("bankruptcy game is monotone under inclusion") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = oracles::random_problem(rng, 2 + static_cast<int>(rng.below(4)));
    const auto game = bankruptcy_game(p);
    const std::uint32_t full = game.grand();
    for (std::uint32_t s = 0; s <= full; ++s) {
      for (std::uint32_t t = s; t <= full; ++t) {
        if ((s & t) == s) CHECK(game.values[s] <= game.values[t] + 1e-12);
      }
    }
    CHECK(game.values[full] == doctest::Approx(p.estate).epsilon(1e-12));
  }
}

TEST_CASE("excess vectors") {
  // Additive game at its own allocation: all excesses zero.
  const auto additive = bankruptcy_game(problem(600, {100, 200, 300}));
  const auto ev = excess_vector(additive, std::vector<double>{100, 200, 300});
  for (double e : ev.excesses) CHECK(std::abs(e) <= 1e-9);

  const auto game = bankruptcy_game(problem(200, {100, 200, 300}));
  const auto top = excess_vector(game, std::vector<double>{50, 75, 75});
  CHECK(top.excesses.front() == doctest::Approx(-50).epsilon(1e-12));
  CHECK(top.excesses.size() == 6);

  CHECK_THROWS_AS(excess_vector(game, std::vector<double>{50, 75, 80}),
                  std::invalid_argument);
}

TEST_CASE("leximin comparison") {
  auto ev = [](std::vector<double> v) {
    ExcessVector e;
    e.excesses = std::move(v);
    return e;
  };
  CHECK(leximin_compare(ev({-1, -2}), ev({-1, -2})) == Ordering::equal);
  CHECK(leximin_compare(ev({-2, -2}), ev({-1, -3})) == Ordering::less);
  CHECK(leximin_compare(ev({0, -5}), ev({0, -4})) == Ordering::less);
  CHECK(leximin_compare(ev({0, -4}), ev({0, -5})) == Ordering::greater);
  CHECK_THROWS_AS(leximin_compare(ev({0}), ev({0, 1})), std::invalid_argument);
}

TEST_CASE("nucleolus falsifier accepts the Talmud point and rejects others") {
  const auto p = problem(200, {100, 200, 300});
  const auto game = bankruptcy_game(p);
  const auto talmud = divide_talmud(p).payouts;

  const auto ok = nucleolus_check(game, talmud, 10000, 99);
  CHECK_FALSE(ok.dominated);

  const auto prop = divide_proportional(p).payouts;
  const auto bad = nucleolus_check(game, prop, 10000, 99);
  CHECK(bad.dominated);
  REQUIRE(bad.witness.has_value());
  // The witness really is leximin-better.
  const auto wit_ev = excess_vector(game, *bad.witness);
  const auto prop_ev = excess_vector(game, prop);
  CHECK(leximin_compare(wit_ev, prop_ev) == Ordering::less);
}

TEST_CASE("one-player game cannot be dominated") {
  const auto game = make_game(1, {0.0, 5.0});
  const auto report = nucleolus_check(game, std::vector<double>{5.0}, 100, 1);
  CHECK_FALSE(report.dominated);
}

TEST_CASE("nucleolus check is deterministic and matches the serial reference") {
  const auto p = problem(120, {30, 80, 90});
  const auto game = bankruptcy_game(p);
  const auto prop = divide_proportional(p).payouts;
  const auto a = nucleolus_check(game, prop, 4000, 7);
  const auto b = nucleolus_check_serial(game, prop, 4000, 7);
  CHECK(a.dominated == b.dominated);
  REQUIRE(a.witness.has_value());
  REQUIRE(b.witness.has_value());
  CHECK(*a.witness == *b.witness);
}

TEST_CASE("grid oracle finds the contested-garment point") {
  const auto game = bankruptcy_game(problem(200, {100, 200, 300}));
  const auto point = nucleolus_bruteforce(game, 400);
  CHECK(std::abs(point[0] - 50.0) <= 0.5);
  CHECK(std::abs(point[1] - 75.0) <= 0.5);
  CHECK(std::abs(point[2] - 75.0) <= 0.5);
}

TEST_CASE("grid oracle matches the two-player standard solution") {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    // Superadditive two-player game with nonnegative values.
    const double v1 = rng.uniform(0.0, 10.0);
    const double v2 = rng.uniform(0.0, 10.0);
    const double v12 = v1 + v2 + rng.uniform(0.0, 10.0);
    const auto game = make_game(2, {0.0, v1, v2, v12});
    const auto point = nucleolus_bruteforce(game, 400);
    const double x1 = v1 + (v12 - v1 - v2) / 2.0;
    const double x2 = v2 + (v12 - v1 - v2) / 2.0;
    CHECK(std::abs(point[0] - x1) <= v12 / 400.0 + 1e-9);
    CHECK(std::abs(point[1] - x2) <= v12 / 400.0 + 1e-9);
  }
}

TEST_CASE("grid oracle on the zero game returns the origin") {
  const auto game = make_game(2, {0.0, 0.0, 0.0, 0.0});
  const auto point = nucleolus_bruteforce(game, 100);
  CHECK(point == std::vector<double>{0.0, 0.0});
}

TEST_CASE("grid oracle guards") {
  Rng rng(1);
  const auto game = random_game(rng, 5);
  CHECK_THROWS_AS(nucleolus_bruteforce(game, 10), GuardError);
}

TEST_CASE("parallel grid oracle is bit-identical to the serial reference") {
  Rng rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = oracles::random_problem(rng, 2 + static_cast<int>(rng.below(3)));
    const auto game = bankruptcy_game(p);
    CHECK(nucleolus_bruteforce(game, 60) == nucleolus_bruteforce_serial(game, 60));
  }
}

TEST_CASE("Talmud = nucleolus on random problems (desk-scale sample)") {
  Rng rng(53);
  int done = 0;
  while (done < 30) {
    const int n = 2 + static_cast<int>(rng.below(3));
    const auto p = oracles::random_problem(rng, n);
    if (p.estate <= 0.0) continue;
    ++done;
    const auto game = bankruptcy_game(p);
    const auto talmud = divide_talmud(p).payouts;
    const auto report = nucleolus_check(game, talmud, 2000, 1000 + done);
    CAPTURE(done);
    CHECK_FALSE(report.dominated);

    const int res = (n <= 3) ? 150 : 100;
    const auto grid = nucleolus_bruteforce(game, res);
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(grid[i] - talmud[i]) <=
            p.estate / static_cast<double>(res) + 1e-9);
    }
  }
}

TEST_CASE("shapley guard for oversized games") {
  CHECK_THROWS_WITH_AS(make_game(25, {}), "exact Shapley table too large",
                       GuardError);
  BankruptcyProblem p;
  for (int i = 0; i < 25; ++i) {
    p.creditors.push_back("p" + std::to_string(i));
    p.claims.push_back(1.0);
  }
  p.estate = 10.0;
  CHECK_THROWS_AS(bankruptcy_game(p), GuardError);
}

TEST_CASE("game JSON round-trip and errors") {
  const auto game = bankruptcy_game(problem(200, {100, 200, 300}));
  const auto j = game_to_json(game);
  const auto back = game_from_json(j);
  CHECK(back.n == game.n);
  CHECK(back.values == game.values);

  auto broken = j;
  broken["values"].erase("3");
  CHECK_THROWS_AS(game_from_json(broken), std::invalid_argument);

  auto bad_mask = j;
  bad_mask["values"]["9"] = 1.0;
  CHECK_THROWS_AS(game_from_json(bad_mask), std::invalid_argument);
}
