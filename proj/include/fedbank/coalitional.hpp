#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedbank/bankruptcy.hpp"

namespace fedbank {

// Characteristic function over subsets of the passive parties, stored as a
// dense table: values[mask] = v(S) where bit i of mask means player i is in
// the coalition. The dense table is what makes the exact-Shapley cost model
// explicit, hence the hard player-count guard.
struct CoalitionalGame {
  static constexpr int kMaxPlayers = 24;

  int n = 0;
  std::vector<double> values;  // size 1 << n, values[0] == 0

  std::uint32_t grand() const { return (1u << n) - 1; }
  double v(std::uint32_t mask) const { return values[mask]; }
};

// Validates the table (size, finiteness, v(empty) == 0).
CoalitionalGame make_game(int n, std::vector<double> values);

// v(S) = max(0, E - sum of claims outside S). v(N) equals the estate and v is
// monotone under set inclusion.
CoalitionalGame bankruptcy_game(const BankruptcyProblem& problem);

// Exact Shapley values by subset enumeration with factorial weights,
// O(n * 2^n). Throws GuardError for n > 24.
std::vector<double> shapley_exact(const CoalitionalGame& game);
std::vector<double> shapley_exact_serial(const CoalitionalGame& game);

// Excesses e(S, x) = v(S) - x(S) over all proper nonempty coalitions, sorted
// descending. Requires sum(x) == v(N) within 1e-6.
struct ExcessVector {
  std::vector<double> excesses;
};

ExcessVector excess_vector(const CoalitionalGame& game,
                           std::span<const double> allocation);

enum class Ordering { less, equal, greater };

// Lexicographic comparison of descending excess vectors with a 1e-9 per-entry
// tolerance; `less` means `a` is nucleolus-preferred.
Ordering leximin_compare(const ExcessVector& a, const ExcessVector& b);

// Falsifier for "candidate is the nucleolus": samples `trials` efficient
// allocations (simplex draws plus zero-sum perturbations of the candidate at
// relative steps 1e-1/1e-2/1e-3) and reports the first one whose excess
// vector is leximin-less than the candidate's, if any.
struct NucleolusCheckReport {
  bool dominated = false;
  std::optional<std::vector<double>> witness;
  std::uint64_t trials = 0;
};

NucleolusCheckReport nucleolus_check(const CoalitionalGame& game,
                                     std::span<const double> candidate,
                                     std::uint64_t trials, std::uint64_t seed);
NucleolusCheckReport nucleolus_check_serial(const CoalitionalGame& game,
                                            std::span<const double> candidate,
                                            std::uint64_t trials,
                                            std::uint64_t seed);

// Grid oracle: enumerates the efficiency simplex at `resolution` divisions
// per axis and returns the point with the leximin-minimal excess vector.
// Ties go to the first grid point in enumeration order. n <= 4 only;
// accuracy is about v(N)/resolution per coordinate.
std::vector<double> nucleolus_bruteforce(const CoalitionalGame& game,
                                         int resolution);
std::vector<double> nucleolus_bruteforce_serial(const CoalitionalGame& game,
                                                int resolution);

}  // namespace fedbank
