#include "fedbank/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "fedbank/rng.hpp"

namespace fedbank {

namespace {

bool is_missing_token(const std::string& cell) {
  return cell.empty() || cell == "?";
}

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

// Exact cell signature used for duplicate detection.
void append_cell_key(const Column& col, std::size_t row, std::string& key) {
  if (col.is_missing(row)) {
    key += "\x01M";
  } else if (col.kind == ColumnKind::categorical ||
             (!col.tokens.empty() && col.numeric.empty())) {
    key += col.tokens[row];
  } else {
    const double v = col.numeric[row];
    char buf[sizeof(double)];
    std::memcpy(buf, &v, sizeof(double));
    key.append(buf, sizeof(double));
  }
  key += '\x1f';
}

}  // namespace

const Column* Table::find(const std::string& name) const {
  for (const auto& col : columns) {
    if (col.name == name) return &col;
  }
  return nullptr;
}

int Table::label_index() const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].kind == ColumnKind::label) return static_cast<int>(i);
  }
  return -1;
}

Table load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("missing header row: " + path.string());
  }
  const auto header = split_line(line);
  if (header.empty()) throw std::runtime_error("empty header row");

  std::vector<std::vector<std::string>> cells(header.size());
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    auto row = split_line(line);
    if (row.size() != header.size()) {
      throw std::runtime_error("ragged row " + std::to_string(rows + 2) + " in " +
                               path.string());
    }
    for (std::size_t c = 0; c < row.size(); ++c) cells[c].push_back(std::move(row[c]));
    ++rows;
  }

  bool saw_label = false;
  Table table;
  table.rows = rows;
  table.row_ids.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) table.row_ids[i] = i;

  for (std::size_t c = 0; c < header.size(); ++c) {
    Column col;
    col.name = header[c];
    col.source = header[c];
    col.missing.assign(rows, 0);
    bool any_missing = false;
    bool all_numeric = true;
    std::vector<double> parsed(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::string& cell = cells[c][r];
      if (is_missing_token(cell)) {
        col.missing[r] = 1;
        any_missing = true;
        continue;
      }
      if (all_numeric && !parse_double(cell, parsed[r])) all_numeric = false;
    }
    if (col.name == label_column) {
      col.kind = ColumnKind::label;
      saw_label = true;
    } else {
      col.kind = all_numeric ? ColumnKind::numeric : ColumnKind::categorical;
    }
    if (all_numeric) {
      col.numeric = std::move(parsed);
    }
    if (!all_numeric || col.kind == ColumnKind::label) {
      col.tokens = std::move(cells[c]);
    }
    if (!any_missing) col.missing.clear();
    table.columns.push_back(std::move(col));
  }
  if (!saw_label) {
    throw std::runtime_error("label column not found: " + label_column);
  }
  return table;
}

Table preprocess(const Table& table) {
  const int label_idx = table.label_index();
  if (label_idx < 0) throw std::invalid_argument("table has no label column");

  // Duplicate rows: exact match over all columns, first occurrence kept.
  std::vector<std::size_t> kept;
  {
    std::unordered_set<std::string> seen;
    std::string key;
    for (std::size_t r = 0; r < table.rows; ++r) {
      key.clear();
      for (const auto& col : table.columns) append_cell_key(col, r, key);
      if (seen.insert(key).second) kept.push_back(r);
    }
  }

  // Rows with missing cells are dropped rather than imputed.
  std::vector<std::size_t> clean;
  for (std::size_t r : kept) {
    bool missing = false;
    for (const auto& col : table.columns) {
      if (col.is_missing(r)) {
        missing = true;
        break;
      }
    }
    if (!missing) clean.push_back(r);
  }
  if (clean.empty()) throw std::runtime_error("table empty after cleaning");

  const Column& label_col = table.columns[static_cast<std::size_t>(label_idx)];
  std::vector<double> labels(clean.size());
  if (!label_col.numeric.empty()) {
    for (std::size_t i = 0; i < clean.size(); ++i) {
      const double v = label_col.numeric[clean[i]];
      if (v != 0.0 && v != 1.0) {
        throw std::runtime_error("label column non-binary");
      }
      labels[i] = v;
    }
  } else {
    std::set<std::string> distinct;
    for (std::size_t r : clean) distinct.insert(label_col.tokens[r]);
    if (distinct.size() != 2) throw std::runtime_error("label column non-binary");
    const std::string& one = *std::next(distinct.begin());
    for (std::size_t i = 0; i < clean.size(); ++i) {
      labels[i] = (label_col.tokens[clean[i]] == one) ? 1.0 : 0.0;
    }
  }

  Table out;
  out.rows = clean.size();
  out.row_ids.reserve(clean.size());
  for (std::size_t r : clean) out.row_ids.push_back(table.row_ids[r]);

  for (const auto& col : table.columns) {
    if (col.kind == ColumnKind::label) {
      Column lab;
      lab.name = col.name;
      lab.source = col.name;
      lab.kind = ColumnKind::label;
      lab.numeric = labels;
      out.columns.push_back(std::move(lab));
    } else if (col.kind == ColumnKind::numeric) {
      Column num;
      num.name = col.name;
      num.source = col.name;
      num.kind = ColumnKind::numeric;
      num.numeric.reserve(clean.size());
      for (std::size_t r : clean) num.numeric.push_back(col.numeric[r]);
      out.columns.push_back(std::move(num));
    } else {
      std::set<std::string> distinct;
      for (std::size_t r : clean) distinct.insert(col.tokens[r]);
      for (const auto& token : distinct) {
        Column ind;
        ind.name = col.name + "=" + token;
        ind.source = col.name;
        ind.kind = ColumnKind::numeric;
        ind.numeric.reserve(clean.size());
        for (std::size_t r : clean) {
          ind.numeric.push_back(col.tokens[r] == token ? 1.0 : 0.0);
        }
        out.columns.push_back(std::move(ind));
      }
    }
  }
  return out;
}

std::vector<PartyDataset> vertical_partition(const Table& table,
                                             const PartitionSpec& spec) {
  const int label_idx = table.label_index();
  if (label_idx < 0) throw std::invalid_argument("table has no label column");
  const std::string& label_name =
      table.columns[static_cast<std::size_t>(label_idx)].name;
  if (!spec.label_column.empty() && spec.label_column != label_name) {
    throw std::invalid_argument("partition label column does not match table");
  }

  std::map<std::string, std::string> owner;  // source column -> party
  bool active_found = false;
  for (const auto& entry : spec.parties) {
    const bool is_active = entry.party_id == spec.active_party;
    active_found = active_found || is_active;
    for (const auto& col : entry.columns) {
      if (col == label_name) {
        if (!is_active) {
          throw std::invalid_argument("label column assigned to passive party " +
                                      entry.party_id);
        }
        continue;  // the label is routed to the active party implicitly
      }
      auto [it, inserted] = owner.emplace(col, entry.party_id);
      if (!inserted) {
        throw std::invalid_argument("column assigned to multiple parties: " + col);
      }
    }
  }
  if (!active_found) {
    throw std::invalid_argument("active party missing from partition spec");
  }

  // Every non-label source column must be covered, and every spec column must
  // exist in the table.
  std::set<std::string> sources;
  for (const auto& col : table.columns) {
    if (col.kind != ColumnKind::label) sources.insert(col.source);
  }
  for (const auto& [col, party] : owner) {
    if (!sources.count(col)) {
      throw std::invalid_argument("partition names unknown column: " + col);
    }
  }
  for (const auto& src : sources) {
    if (!owner.count(src)) {
      throw std::invalid_argument("column not assigned to any party: " + src);
    }
  }

  std::vector<PartyDataset> parties;
  for (const auto& entry : spec.parties) {
    PartyDataset party;
    party.party_id = entry.party_id;
    party.role = (entry.party_id == spec.active_party) ? PartyRole::active
                                                       : PartyRole::passive;
    party.row_index = table.row_ids;

    std::vector<const Column*> cols;
    for (const auto& col : table.columns) {
      if (col.kind == ColumnKind::label) continue;
      auto it = owner.find(col.source);
      if (it != owner.end() && it->second == entry.party_id) cols.push_back(&col);
    }
    party.features = Matrix(table.rows, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
      party.feature_names.push_back(cols[j]->name);
      for (std::size_t r = 0; r < table.rows; ++r) {
        party.features.at(r, j) = cols[j]->numeric[r];
      }
    }
    if (party.role == PartyRole::active) {
      party.labels = table.columns[static_cast<std::size_t>(label_idx)].numeric;
    }
    parties.push_back(std::move(party));
  }
  return parties;
}

SplitParties train_test_split(std::span<const PartyDataset> parties,
                              double ratio, std::uint64_t seed) {
  if (parties.empty()) throw std::invalid_argument("no parties to split");
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("split ratio must be in (0, 1)");
  }
  const std::size_t n = parties[0].features.rows;
  if (n < 2) throw std::invalid_argument("fewer than 2 rows");
  for (const auto& p : parties) {
    if (p.features.rows != n || p.row_index != parties[0].row_index) {
      throw std::invalid_argument("parties are not row-aligned");
    }
  }

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(perm);

  const std::size_t train_n = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(n)));

  auto take = [&](const PartyDataset& p, std::size_t begin, std::size_t end) {
    PartyDataset out;
    out.party_id = p.party_id;
    out.role = p.role;
    out.feature_names = p.feature_names;
    out.features = Matrix(end - begin, p.features.cols);
    out.row_index.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t src = perm[i];
      std::copy(p.features.row(src).begin(), p.features.row(src).end(),
                out.features.row(i - begin).begin());
      out.row_index.push_back(p.row_index[src]);
      if (p.role == PartyRole::active) out.labels.push_back(p.labels[src]);
    }
    return out;
  };

  SplitParties split;
  for (const auto& p : parties) {
    split.train.push_back(take(p, 0, train_n));
    split.test.push_back(take(p, train_n, n));
  }
  return split;
}

void standardize(SplitParties& split) {
  for (std::size_t pi = 0; pi < split.train.size(); ++pi) {
    Matrix& train = split.train[pi].features;
    Matrix& test = split.test[pi].features;
    const std::size_t n = train.rows;
    if (n == 0) continue;
    for (std::size_t j = 0; j < train.cols; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += train.at(i, j);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = train.at(i, j) - mean;
        var += d * d;
      }
      var /= static_cast<double>(n);
      const double sd = std::sqrt(var);
      if (sd < 1e-12) {
        for (std::size_t i = 0; i < n; ++i) train.at(i, j) = 0.0;
        for (std::size_t i = 0; i < test.rows; ++i) test.at(i, j) = 0.0;
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          train.at(i, j) = (train.at(i, j) - mean) / sd;
        }
        for (std::size_t i = 0; i < test.rows; ++i) {
          test.at(i, j) = (test.at(i, j) - mean) / sd;
        }
      }
    }
  }
}

Table generate_synthetic(std::size_t n_samples, std::size_t n_features,
                         std::size_t n_informative, double noise_sigma,
                         std::uint64_t seed) {
  if (n_samples == 0) throw std::invalid_argument("need at least one sample");
  if (n_features == 0) throw std::invalid_argument("need at least one feature");
  if (n_informative > n_features) {
    throw std::invalid_argument("n_informative exceeds n_features");
  }
  if (!(noise_sigma >= 0.0)) {
    throw std::invalid_argument("noise_sigma must be nonnegative");
  }

  Rng rng(seed);

  // Random direction of norm sqrt(m) in the informative subspace; class
  // means sit at +u and -u, i.e. separation 2.0 per informative feature in
  // the root-mean-square sense (exactly 2.0 when m == 1).
  std::vector<double> direction(n_informative, 0.0);
  if (n_informative > 0) {
    double norm = 0.0;
    while (norm <= 1e-12) {
      norm = 0.0;
      for (auto& d : direction) {
        d = rng.normal();
        norm += d * d;
      }
      norm = std::sqrt(norm);
    }
    const double scale = std::sqrt(static_cast<double>(n_informative)) / norm;
    for (auto& d : direction) d *= scale;
  }

  // Informative features are spread evenly over the columns so a vertical
  // partition leaves every block with some signal.
  std::vector<std::size_t> info_col(n_features, n_informative);
  for (std::size_t k = 0; k < n_informative; ++k) {
    info_col[k * n_features / n_informative] = k;
  }

  Matrix features(n_samples, n_features);
  std::vector<double> labels(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double y = static_cast<double>(i % 2);
    labels[i] = y;
    const double sign = 2.0 * y - 1.0;
    for (std::size_t j = 0; j < n_features; ++j) {
      double v = rng.normal();
      if (info_col[j] < n_informative) v += sign * direction[info_col[j]];
      features.at(i, j) = v;
    }
    for (std::size_t j = 0; j < n_features; ++j) {
      features.at(i, j) += noise_sigma * rng.normal();
    }
  }

  Table table;
  table.rows = n_samples;
  table.row_ids.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) table.row_ids[i] = i;
  for (std::size_t j = 0; j < n_features; ++j) {
    Column col;
    col.name = "f" + std::to_string(j + 1);
    col.source = col.name;
    col.kind = ColumnKind::numeric;
    col.numeric.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) col.numeric[i] = features.at(i, j);
    table.columns.push_back(std::move(col));
  }
  Column label;
  label.name = "target";
  label.source = "target";
  label.kind = ColumnKind::label;
  label.numeric = std::move(labels);
  table.columns.push_back(std::move(label));
  return table;
}

PartyDataset randomize_party(const PartyDataset& party, std::uint64_t seed) {
  if (party.role != PartyRole::passive) {
    throw std::invalid_argument("cannot randomize active party");
  }
  PartyDataset out = party;
  Rng rng(seed);
  for (auto& v : out.features.data) v = rng.normal();
  return out;
}

PartyDataset duplicate_party(const PartyDataset& source, const std::string& new_id,
                             std::span<const PartyDataset> existing) {
  if (source.role != PartyRole::passive) {
    throw std::invalid_argument("can only duplicate passive parties");
  }
  for (const auto& p : existing) {
    if (p.party_id == new_id) {
      throw std::invalid_argument("party id already exists: " + new_id);
    }
  }
  PartyDataset out = source;
  out.party_id = new_id;
  return out;
}

}  // namespace fedbank
