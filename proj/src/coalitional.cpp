#include "fedbank/coalitional.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>

#include "fedbank/errors.hpp"
#include "fedbank/rng.hpp"

namespace fedbank {

namespace {

constexpr double kLeximinTol = 1e-9;
constexpr double kEfficiencyTol = 1e-6;

void check_player_count(int n) {
  if (n < 1) throw std::invalid_argument("game needs at least one player");
  if (n > CoalitionalGame::kMaxPlayers) {
    throw GuardError("exact Shapley table too large");
  }
}

// Subset sums over a weight vector: out[mask] = sum of w[i] for i in mask.
std::vector<double> subset_sums(std::span<const double> w) {
  const std::size_t size = std::size_t{1} << w.size();
  std::vector<double> sums(size, 0.0);
  for (std::uint32_t mask = 1; mask < size; ++mask) {
    const std::uint32_t low = mask & (~mask + 1);
    sums[mask] = sums[mask ^ low] + w[std::countr_zero(low)];
  }
  return sums;
}

// Tolerant lexicographic less-than, same semantics as leximin_compare.
// The tolerance matters: excess entries that are pinned by efficiency tie
// mathematically across grid points but differ by ulps, and an exact compare
// would break such ties before the genuinely differing entry is reached.
bool lex_less(std::span<const double> a, std::span<const double> b) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    if (diff < -kLeximinTol) return true;
    if (diff > kLeximinTol) return false;
  }
  return false;
}

std::vector<double> shapley_impl(const CoalitionalGame& game, bool parallel) {
  check_player_count(game.n);
  const int n = game.n;
  const std::uint32_t full = game.grand();

  // w[s] = s! (n-1-s)! / n!  via w[0] = 1/n, w[s] = w[s-1] * s / (n - s).
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  w[0] = 1.0 / static_cast<double>(n);
  for (int s = 1; s < n; ++s) {
    w[s] = w[s - 1] * static_cast<double>(s) / static_cast<double>(n - s);
  }

  std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(static) if (parallel && n > 1)
  for (int i = 0; i < n; ++i) {
    const std::uint32_t bit = 1u << i;
    double acc = 0.0;
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
      if (mask & bit) continue;
      acc += w[std::popcount(mask)] * (game.values[mask | bit] - game.values[mask]);
    }
    phi[i] = acc;
  }
  return phi;
}

struct Scratch {
  std::vector<double> alloc_sums;  // subset sums of the allocation
  std::vector<double> excesses;
};

// Fills scratch.excesses with the descending excess vector of `x`.
void excesses_at(const CoalitionalGame& game, std::span<const double> x,
                 Scratch& scratch) {
  const std::uint32_t full = game.grand();
  auto& exc = scratch.excesses;
  exc.clear();
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    double xs = 0.0;
    std::uint32_t m = mask;
    while (m) {
      const std::uint32_t low = m & (~m + 1);
      xs += x[std::countr_zero(low)];
      m ^= low;
    }
    exc.push_back(game.values[mask] - xs);
  }
  std::sort(exc.begin(), exc.end(), std::greater<>());
}

NucleolusCheckReport nucleolus_check_impl(const CoalitionalGame& game,
                                          std::span<const double> candidate,
                                          std::uint64_t trials,
                                          std::uint64_t seed, bool parallel) {
  check_player_count(game.n);
  const int n = game.n;
  if (candidate.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("candidate length mismatch");
  }
  const double grand_value = game.values[game.grand()];
  double total = 0.0;
  for (double x : candidate) total += x;
  if (std::abs(total - grand_value) > kEfficiencyTol * std::max(1.0, std::abs(grand_value))) {
    throw std::invalid_argument("candidate allocation is not efficient");
  }

  NucleolusCheckReport report;
  report.trials = trials;

  ExcessVector cand;
  {
    Scratch s;
    excesses_at(game, candidate, s);
    cand.excesses = s.excesses;
  }
  if (cand.excesses.empty()) return report;  // one player: nothing to dominate

  const std::int64_t count = static_cast<std::int64_t>(trials);
  std::int64_t best_trial = -1;
  std::vector<double> best_alloc;

  // Draws the t-th sample. Returns false if the trial degenerates (zero-norm
  // direction), which counts as a non-dominating trial.
  auto draw = [&](std::int64_t t, std::vector<double>& x) -> bool {
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(t)));
    x.assign(static_cast<std::size_t>(n), 0.0);
    const int kind = static_cast<int>(t % 4);
    if (kind == 0) {
      // Dirichlet(1,...,1) scaled to the efficiency level.
      double sum = 0.0;
      for (auto& xi : x) {
        xi = rng.exponential();
        sum += xi;
      }
      if (sum <= 0.0) return false;
      for (auto& xi : x) xi = grand_value * xi / sum;
    } else {
      // Zero-sum perturbation of the candidate, step 1e-1/1e-2/1e-3 of v(N).
      const double step = std::abs(grand_value) * std::pow(10.0, -kind);
      double mean = 0.0;
      for (auto& xi : x) {
        xi = rng.normal();
        mean += xi;
      }
      mean /= static_cast<double>(n);
      double norm = 0.0;
      for (auto& xi : x) {
        xi -= mean;
        norm += xi * xi;
      }
      norm = std::sqrt(norm);
      if (norm <= 1e-300) return false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = candidate[i] + step * x[i] / norm;
      }
    }
    return true;
  };

#pragma omp parallel if (parallel)
  {
    Scratch scratch;
    std::vector<double> x;
    std::int64_t local_best = -1;
    std::vector<double> local_alloc;

#pragma omp for schedule(static) nowait
    for (std::int64_t t = 0; t < count; ++t) {
      if (local_best >= 0 && t > local_best) continue;
      if (!draw(t, x)) continue;
      excesses_at(game, x, scratch);
      ExcessVector ev;
      ev.excesses = scratch.excesses;
      if (leximin_compare(ev, cand) == Ordering::less) {
        if (local_best < 0 || t < local_best) {
          local_best = t;
          local_alloc = x;
        }
      }
    }

#pragma omp critical
    {
      if (local_best >= 0 && (best_trial < 0 || local_best < best_trial)) {
        best_trial = local_best;
        best_alloc = local_alloc;
      }
    }
  }

  if (best_trial >= 0) {
    report.dominated = true;
    report.witness = best_alloc;
  }
  return report;
}

std::vector<double> bruteforce_impl(const CoalitionalGame& game, int resolution,
                                    bool parallel) {
  if (game.n > 4) throw GuardError("oracle limited to small games");
  check_player_count(game.n);
  if (resolution < 1) throw std::invalid_argument("resolution must be >= 1");
  const double grand_value = game.values[game.grand()];
  if (grand_value < 0.0) {
    throw std::invalid_argument("grid oracle requires v(N) >= 0");
  }
  const int n = game.n;
  if (n == 1) return {grand_value};

  const std::size_t m = (std::size_t{1} << n) - 2;  // proper nonempty coalitions
  struct StripeBest {
    bool found = false;
    std::vector<double> excesses;
    std::vector<double> point;
  };
  std::vector<StripeBest> stripes(static_cast<std::size_t>(resolution) + 1);

  // Stripe k1 scans all grid points whose first coordinate is k1, in a fixed
  // nested order, keeping its first leximin-minimal point.
  auto scan_stripe = [&](int k1) {
    StripeBest& best = stripes[static_cast<std::size_t>(k1)];
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    std::vector<double> exc(m);
    const double unit = grand_value / static_cast<double>(resolution);

    auto consider = [&]() {
      // Max excess first: anything above the incumbent's head loses outright.
      double max_exc = -std::numeric_limits<double>::infinity();
      const std::uint32_t full = game.grand();
      std::size_t idx = 0;
      for (std::uint32_t mask = 1; mask < full; ++mask) {
        double xs = 0.0;
        std::uint32_t mm = mask;
        while (mm) {
          const std::uint32_t low = mm & (~mm + 1);
          xs += x[std::countr_zero(low)];
          mm ^= low;
        }
        exc[idx] = game.values[mask] - xs;
        max_exc = std::max(max_exc, exc[idx]);
        ++idx;
      }
      if (best.found && max_exc > best.excesses[0] + kLeximinTol) return;
      std::sort(exc.begin(), exc.end(), std::greater<>());
      if (!best.found || lex_less(exc, best.excesses)) {
        best.found = true;
        best.excesses = exc;
        best.point = x;
      }
    };

    std::function<void(int, int)> rec = [&](int dim, int left) {
      if (dim == n - 1) {
        x[static_cast<std::size_t>(dim)] = unit * left;
        consider();
        return;
      }
      for (int k = 0; k <= left; ++k) {
        x[static_cast<std::size_t>(dim)] = unit * k;
        rec(dim + 1, left - k);
      }
    };

    x[0] = unit * k1;
    rec(1, resolution - k1);
  };

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int k1 = 0; k1 <= resolution; ++k1) {
    scan_stripe(k1);
  }

  // Sequential reduce in stripe order keeps the first-point tie-break exact.
  const StripeBest* winner = nullptr;
  for (const auto& s : stripes) {
    if (!s.found) continue;
    if (!winner || lex_less(s.excesses, winner->excesses)) winner = &s;
  }
  return winner->point;
}

}  // namespace

CoalitionalGame make_game(int n, std::vector<double> values) {
  check_player_count(n);
  if (values.size() != (std::size_t{1} << n)) {
    throw std::invalid_argument("characteristic table must have 2^n entries");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite coalition value");
  }
  if (values[0] != 0.0) {
    throw std::invalid_argument("empty coalition must have value 0");
  }
  CoalitionalGame game;
  game.n = n;
  game.values = std::move(values);
  return game;
}

CoalitionalGame bankruptcy_game(const BankruptcyProblem& problem) {
  const int n = static_cast<int>(problem.size());
  check_player_count(n);
  auto sums = subset_sums(problem.claims);
  const double total = sums.back();  // sum over the grand coalition
  std::vector<double> values(sums.size());
  for (std::size_t mask = 0; mask < sums.size(); ++mask) {
    values[mask] = std::max(0.0, problem.estate - (total - sums[mask]));
  }
  values[0] = std::max(0.0, problem.estate - total);  // == 0 for canonical input
  CoalitionalGame game;
  game.n = n;
  game.values = std::move(values);
  return game;
}

std::vector<double> shapley_exact(const CoalitionalGame& game) {
  return shapley_impl(game, true);
}

std::vector<double> shapley_exact_serial(const CoalitionalGame& game) {
  return shapley_impl(game, false);
}

ExcessVector excess_vector(const CoalitionalGame& game,
                           std::span<const double> allocation) {
  check_player_count(game.n);
  if (allocation.size() != static_cast<std::size_t>(game.n)) {
    throw std::invalid_argument("allocation length mismatch");
  }
  const double grand_value = game.values[game.grand()];
  double total = 0.0;
  for (double x : allocation) total += x;
  if (std::abs(total - grand_value) >
      kEfficiencyTol * std::max(1.0, std::abs(grand_value))) {
    throw std::invalid_argument("allocation is not efficient");
  }
  Scratch scratch;
  excesses_at(game, allocation, scratch);
  ExcessVector ev;
  ev.excesses = std::move(scratch.excesses);
  return ev;
}

Ordering leximin_compare(const ExcessVector& a, const ExcessVector& b) {
  if (a.excesses.size() != b.excesses.size()) {
    throw std::invalid_argument("excess vectors of different games");
  }
  for (std::size_t k = 0; k < a.excesses.size(); ++k) {
    const double diff = a.excesses[k] - b.excesses[k];
    if (diff < -kLeximinTol) return Ordering::less;
    if (diff > kLeximinTol) return Ordering::greater;
  }
  return Ordering::equal;
}

NucleolusCheckReport nucleolus_check(const CoalitionalGame& game,
                                     std::span<const double> candidate,
                                     std::uint64_t trials, std::uint64_t seed) {
  return nucleolus_check_impl(game, candidate, trials, seed, true);
}

NucleolusCheckReport nucleolus_check_serial(const CoalitionalGame& game,
                                            std::span<const double> candidate,
                                            std::uint64_t trials,
                                            std::uint64_t seed) {
  return nucleolus_check_impl(game, candidate, trials, seed, false);
}

std::vector<double> nucleolus_bruteforce(const CoalitionalGame& game,
                                         int resolution) {
  return bruteforce_impl(game, resolution, true);
}

std::vector<double> nucleolus_bruteforce_serial(const CoalitionalGame& game,
                                                int resolution) {
  return bruteforce_impl(game, resolution, false);
}

}  // namespace fedbank
