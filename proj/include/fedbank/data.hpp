#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedbank/matrix.hpp"

namespace fedbank {

enum class ColumnKind { numeric, categorical, label };

// One column of a table. Numeric and label columns carry parsed doubles;
// categorical columns carry raw tokens until one-hot encoding. `source` is
// the original column name (one-hot indicators keep their parent's name
// there so vertical partitioning can route them).
struct Column {
  std::string name;
  std::string source;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<double> numeric;
  std::vector<std::string> tokens;
  std::vector<std::uint8_t> missing;  // empty means "no missing cells"

  bool is_missing(std::size_t row) const {
    return !missing.empty() && missing[row] != 0;
  }
};

struct Table {
  std::vector<Column> columns;
  std::size_t rows = 0;
  std::vector<std::size_t> row_ids;  // original CSV ordinals, survive cleaning

  const Column* find(const std::string& name) const;
  int label_index() const;  // -1 when absent
};

// Comma-separated UTF-8 file with a header row; `?` and the empty string are
// missing markers. A column whose non-missing cells all parse as numbers is
// numeric, otherwise categorical. The named label column gets kind=label.
Table load_csv(const std::filesystem::path& path, const std::string& label_column);

// Cleaning + encoding: exact-duplicate rows dropped (first kept), rows with
// missing cells dropped, categorical columns expanded to 0/1 indicators named
// "<col>=<token>" (token order sorted), numeric columns passed through.
// The label must be binary: numeric {0,1}, or exactly two distinct tokens
// which are mapped to 0/1 in sorted token order.
Table preprocess(const Table& table);

struct PartitionSpec {
  struct Entry {
    std::string party_id;
    std::vector<std::string> columns;  // original (pre-encoding) column names
  };
  std::vector<Entry> parties;  // listed order fixes party order everywhere
  std::string active_party;
  std::string label_column;
};

enum class PartyRole { active, passive };

struct PartyDataset {
  std::string party_id;
  PartyRole role = PartyRole::passive;
  Matrix features;
  std::vector<std::string> feature_names;
  std::vector<double> labels;  // active party only
  std::vector<std::size_t> row_index;
};

// Splits an encoded table column-wise per the partition spec. Every output
// shares the table's row ids; the active party also gets the label column.
std::vector<PartyDataset> vertical_partition(const Table& table,
                                             const PartitionSpec& spec);

struct SplitParties {
  std::vector<PartyDataset> train;
  std::vector<PartyDataset> test;
};

// One seeded permutation applied identically to every party; the first
// floor(ratio * n) rows train.
SplitParties train_test_split(std::span<const PartyDataset> parties,
                              double ratio, std::uint64_t seed);

// Zero-mean/unit-variance scaling per feature column, statistics from the
// train split only, applied to both splits. Constant columns become zeros.
void standardize(SplitParties& split);

// Binary-label table: `n_informative` features drawn from two unit-variance
// Gaussian clusters with class-mean separation 2.0 per informative feature
// (means at +-u with |u| = sqrt(n_informative) along a random direction), the
// rest standard Gaussian noise, plus N(0, noise_sigma^2) on every feature.
// Informative columns are spread evenly over the feature range; classes are
// balanced. Columns f1..f<n_features> and label column "target".
Table generate_synthetic(std::size_t n_samples, std::size_t n_features,
                         std::size_t n_informative, double noise_sigma,
                         std::uint64_t seed);

// Dummy-player construction: same shape and row ids, features replaced with
// seeded standard Gaussians. Passive parties only.
PartyDataset randomize_party(const PartyDataset& party, std::uint64_t seed);

// Redundant-party construction: bit-identical feature copy under a new id.
// Passive source only; the new id must not collide with `existing`.
PartyDataset duplicate_party(const PartyDataset& source, const std::string& new_id,
                             std::span<const PartyDataset> existing);

}  // namespace fedbank
