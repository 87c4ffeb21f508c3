// Command-line surface: standalone division/Shapley calculators, the full
// experiment runner, and the synthetic dataset generator.
#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fedbank/errors.hpp"
#include "fedbank/json_io.hpp"
#include "fedbank/pipeline.hpp"

using nlohmann::json;

namespace {

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Shortest round-trip representation, for byte-stable CSV output.
std::string fmt_full(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  json j;
  in >> j;
  return j;
}

// "1.5,2,3" -> values; nullopt when the text is not an inline number list.
std::optional<std::vector<double>> parse_inline_claims(const std::string& text) {
  std::vector<double> values;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const std::size_t comma = text.find(',', begin);
    const std::string cell =
        text.substr(begin, comma == std::string::npos ? comma : comma - begin);
    double v = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || cell.empty()) return std::nullopt;
    values.push_back(v);
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  if (values.empty()) return std::nullopt;
  return values;
}

void print_vector(const std::string& prefix, const std::vector<double>& values) {
  std::string line = prefix;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i || !prefix.empty()) line += " ";
    line += fmt2(values[i]);
  }
  std::cout << line << "\n";
}

struct AllocateArgs {
  std::string claims;
  double estate = 0.0;
  bool estate_set = false;
  std::string rule = "talmud";
  bool rule_set = false;
  std::optional<double> budget;
  bool as_json = false;
};

int cmd_allocate(const AllocateArgs& args) {
  double estate = args.estate;
  std::vector<double> claims;
  std::vector<std::string> creditors;
  fedbank::Rule rule = fedbank::rule_from_string(args.rule);

  if (auto inline_claims = parse_inline_claims(args.claims)) {
    if (!args.estate_set) {
      throw std::invalid_argument("--estate is required with an inline claims list");
    }
    claims = *inline_claims;
    for (std::size_t i = 0; i < claims.size(); ++i) {
      creditors.push_back("p" + std::to_string(i + 1));
    }
  } else {
    const auto doc = fedbank::problem_from_json(load_json_file(args.claims));
    claims = doc.claims;
    creditors = doc.creditors;
    if (!args.estate_set) estate = doc.estate;
    if (!args.rule_set && doc.rule) rule = *doc.rule;
  }

  const auto outcome = fedbank::allocate(estate, claims, creditors, rule);
  if (args.as_json) {
    json j = fedbank::payout_to_json(outcome, creditors);
    if (args.budget) {
      const double effective =
          outcome.problem.estate + outcome.payout.surplus_paid + outcome.undistributed;
      json shares = json::object();
      if (effective > 0.0) {
        const auto values =
            fedbank::budget_split(outcome.payout.payouts, effective, *args.budget);
        for (std::size_t i = 0; i < creditors.size(); ++i) {
          shares[creditors[i]] = values[i];
        }
      }
      j["budget_shares"] = shares;
    }
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  print_vector("", outcome.payout.payouts);
  if (args.budget) {
    const double effective =
        outcome.problem.estate + outcome.payout.surplus_paid + outcome.undistributed;
    if (effective > 0.0) {
      print_vector("budget:",
                   fedbank::budget_split(outcome.payout.payouts, effective,
                                         *args.budget));
    } else {
      std::cout << "budget: (estate empty, nothing to split)\n";
    }
  }
  for (const auto& note : outcome.log.notes) std::cerr << "note: " << note << "\n";
  return 0;
}

struct ShapleyArgs {
  std::string game_path;
  double estate = 0.0;
  bool estate_set = false;
  std::string claims;
  bool as_json = false;
};

int cmd_shapley(const ShapleyArgs& args) {
  if (!args.game_path.empty()) {
    const auto game = fedbank::game_from_json(load_json_file(args.game_path));
    const auto phi = fedbank::shapley_exact(game);
    if (args.as_json) {
      std::cout << json{{"shapley", phi}}.dump(2) << "\n";
    } else {
      print_vector("shapley:", phi);
    }
    return 0;
  }

  if (!args.estate_set || args.claims.empty()) {
    throw std::invalid_argument("need --game, or --estate with --claims");
  }
  const auto claims = parse_inline_claims(args.claims);
  if (!claims) throw std::invalid_argument("malformed claims list: " + args.claims);
  std::vector<std::string> creditors;
  for (std::size_t i = 0; i < claims->size(); ++i) {
    creditors.push_back("p" + std::to_string(i + 1));
  }
  auto [problem, log] = fedbank::normalize_problem(args.estate, *claims, creditors);
  const auto game = fedbank::bankruptcy_game(problem);
  const auto phi = fedbank::shapley_exact(game);
  const auto talmud = fedbank::divide_talmud(problem).payouts;
  if (args.as_json) {
    std::cout << json{{"shapley", phi}, {"talmud", talmud}}.dump(2) << "\n";
  } else {
    print_vector("shapley:", phi);
    print_vector("talmud: ", talmud);
  }
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  if (!std::filesystem::exists(config_path)) {
    throw std::invalid_argument("config not found: " + config_path);
  }
  const auto config = fedbank::config_from_json(load_json_file(config_path));
  const auto report = fedbank::run_experiment(config);
  fedbank::write_report_files(report, out_dir);
  std::cout << "report written to " << out_dir << " (estate "
            << fmt2(report.estate_raw) << ", " << report.models_trained
            << " models trained)\n";
  return 0;
}

struct GenerateArgs {
  std::size_t samples = 10000;
  std::size_t features = 20;
  std::optional<std::size_t> informative;
  double noise = 0.5;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& args) {
  const std::size_t informative =
      args.informative ? *args.informative : args.features / 2;
  const auto table = fedbank::generate_synthetic(args.samples, args.features,
                                                 informative, args.noise, args.seed);
  std::ofstream out(args.out, std::ios::binary | std::ios::trunc);
  if (!out) throw std::invalid_argument("cannot write " + args.out);
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "," : "") << table.columns[c].name;
  }
  out << "\n";
  for (std::size_t r = 0; r < table.rows; ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out << ",";
      out << fmt_full(table.columns[c].numeric[r]);
    }
    out << "\n";
  }
  std::cout << args.out << ": " << table.rows << " rows, "
            << table.columns.size() << " columns\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incentive allocation for vertical federated learning"};
  app.require_subcommand(1);

  AllocateArgs alloc;
  double alloc_budget = 0.0;
  auto* allocate = app.add_subcommand(
      "allocate", "Divide an estate among claimants with a bankruptcy rule");
  allocate->add_option("--estate", alloc.estate, "Estate to divide");
  allocate->add_option("--claims", alloc.claims,
                       "Comma-separated claims, or a JSON problem file")
      ->required();
  allocate->add_option("--rule", alloc.rule, "proportional|cea|cel|talmud");
  allocate->add_option("--budget", alloc_budget, "Budget to split by payout shares");
  allocate->add_flag("--json", alloc.as_json, "Machine-readable output");

  ShapleyArgs shap;
  auto* shapley = app.add_subcommand(
      "shapley", "Exact Shapley values of a game or an induced bankruptcy game");
  shapley->add_option("--game", shap.game_path, "Coalitional game JSON file");
  shapley->add_option("--estate", shap.estate, "Estate of a claims problem");
  shapley->add_option("--claims", shap.claims, "Comma-separated claims");
  shapley->add_flag("--json", shap.as_json, "Machine-readable output");

  std::string config_path, out_dir = "reports";
  auto* run = app.add_subcommand("run", "Run a full experiment from a JSON config");
  run->add_option("--config", config_path, "Experiment config JSON")->required();
  run->add_option("--out", out_dir, "Output directory for the report files");

  GenerateArgs gen;
  std::size_t gen_informative = 0;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset CSV");
  generate->add_option("--samples", gen.samples, "Number of rows");
  generate->add_option("--features", gen.features, "Number of feature columns");
  generate->add_option("--informative", gen_informative,
                       "Informative feature count (default: features/2)");
  generate->add_option("--noise", gen.noise, "Extra Gaussian noise sigma");
  generate->add_option("--seed", gen.seed, "Generator seed");
  generate->add_option("--out", gen.out, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
    if (allocate->parsed()) {
      alloc.estate_set = allocate->count("--estate") > 0;
      alloc.rule_set = allocate->count("--rule") > 0;
      if (allocate->count("--budget")) alloc.budget = alloc_budget;
      return cmd_allocate(alloc);
    }
    if (shapley->parsed()) {
      shap.estate_set = shapley->count("--estate") > 0;
      return cmd_shapley(shap);
    }
    if (run->parsed()) return cmd_run(config_path, out_dir);
    if (generate->parsed()) {
      if (generate->count("--informative")) gen.informative = gen_informative;
      return cmd_generate(gen);
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n" << app.help() << "\n";
    return 2;
  } catch (const fedbank::GuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
