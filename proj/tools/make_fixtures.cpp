// Writes the bundled demo datasets: synthetic stand-ins that follow the UCI
// heart-disease and bank-marketing schemas (column names, row counts, value
// ranges, categorical vocabularies) with a planted signal spread across the
// party feature blocks. Real UCI exports with the same headers can be dropped
// in as replacements. Output is deterministic.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fedbank/rng.hpp"

using fedbank::Rng;

namespace {

int pick(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double roll = rng.uniform01() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    roll -= weights[i];
    if (roll <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

int clamp_round(double v, int lo, int hi) {
  return std::clamp(static_cast<int>(std::lround(v)), lo, hi);
}

// Logistic noise keeps the label model honest: a linear model can do well
// but never perfectly.
double logistic_noise(Rng& rng, double scale) {
  const double u = std::clamp(rng.uniform01(), 1e-9, 1.0 - 1e-9);
  return scale * std::log(u / (1.0 - u));
}

void write_heart(const std::filesystem::path& path) {
  Rng rng(90210);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << "age,sex,cp,trtbps,chol,fbs,restecg,thalachh,exng,oldpeak,slp,caa,thall,output\n";
  for (int i = 0; i < 303; ++i) {
    const int age = clamp_round(rng.uniform(29, 78), 29, 77);
    const int sex = rng.uniform01() < 0.68 ? 1 : 0;
    const int cp = pick(rng, {0.47, 0.17, 0.29, 0.07});
    const int trtbps = clamp_round(131 + 17 * rng.normal(), 94, 200);
    const int chol = clamp_round(246 + 51 * rng.normal(), 126, 564);
    const int fbs = rng.uniform01() < 0.15 ? 1 : 0;
    const int restecg = pick(rng, {0.49, 0.49, 0.02});
    const int thalachh = clamp_round(150 + 22 * rng.normal(), 71, 202);
    const int exng = rng.uniform01() < 0.33 ? 1 : 0;
    const double oldpeak =
        std::round(std::min(std::abs(1.1 * rng.normal()), 6.2) * 10.0) / 10.0;
    const int slp = pick(rng, {0.07, 0.46, 0.47});
    const int caa = pick(rng, {0.58, 0.21, 0.12, 0.07, 0.02});
    const int thall = pick(rng, {0.02, 0.06, 0.55, 0.37});

    // Signal spread over every party block of the configs/heart.json
    // partition; the active block (age, sex) is deliberately weak.
    double score = -0.018 * (age - 54) - 0.45 * sex         // P_a
                   - 0.0045 * (chol - 246) - 0.25 * fbs     // P_h1
                   + 0.35 * (restecg == 1) - 0.75 * (caa > 0)
                   - 0.85 * oldpeak - 0.8 * exng            // P_h2
                   + 0.45 * (slp == 2) + 0.85 * (cp > 0)
                   + 1.1 * (thall == 2) + 0.022 * (thalachh - 150)  // P_h3
                   - 0.012 * (trtbps - 131);
    const int output = (score + logistic_noise(rng, 0.55) + 0.1) > 0 ? 1 : 0;

    char oldpeak_buf[16];
    std::snprintf(oldpeak_buf, sizeof(oldpeak_buf), "%.1f", oldpeak);
    out << age << ',' << sex << ',' << cp << ',' << trtbps << ',' << chol << ','
        << fbs << ',' << restecg << ',' << thalachh << ',' << exng << ','
        << oldpeak_buf << ',' << slp << ',' << caa << ',' << thall << ','
        << output << "\n";
  }
}

void write_bank(const std::filesystem::path& path) {
  Rng rng(11162);
  const std::vector<std::string> jobs{
      "admin.",     "blue-collar", "technician",  "services",
      "management", "retired",     "self-employed", "entrepreneur",
      "unemployed", "housemaid",   "student"};
  const std::vector<double> job_w{0.12, 0.17, 0.16, 0.08, 0.23, 0.07,
                                  0.04, 0.03, 0.03, 0.03, 0.04};
  const std::vector<std::string> maritals{"married", "single", "divorced"};
  const std::vector<std::string> educations{"primary", "secondary", "tertiary",
                                            "unknown"};
  const std::vector<std::string> contacts{"cellular", "unknown", "telephone"};
  const std::vector<std::string> months{"jan", "feb", "mar", "apr", "may", "jun",
                                        "jul", "aug", "sep", "oct", "nov", "dec"};
  const std::vector<double> month_w{0.03, 0.07, 0.02, 0.07, 0.25, 0.11,
                                    0.13, 0.12, 0.02, 0.03, 0.09, 0.02};
  const std::vector<std::string> poutcomes{"unknown", "failure", "other", "success"};

  std::vector<std::string> lines;
  lines.reserve(11162);
  while (lines.size() < 11162 - 3) {  // three duplicate rows appended below
    const int age = clamp_round(41 + 12 * rng.normal(), 18, 95);
    const int job = pick(rng, job_w);
    const int marital = pick(rng, {0.57, 0.32, 0.11});
    const int education = pick(rng, {0.15, 0.49, 0.33, 0.03});
    const int dflt = rng.uniform01() < 0.016 ? 1 : 0;
    const int balance =
        clamp_round(std::exp(6.3 + 1.1 * rng.normal()) - 250.0, -3000, 81000);
    const int housing = rng.uniform01() < 0.47 ? 1 : 0;
    const int loan = rng.uniform01() < 0.13 ? 1 : 0;
    const int contact = pick(rng, {0.72, 0.21, 0.07});
    const int day = 1 + static_cast<int>(rng.below(31));
    const int month = pick(rng, month_w);
    const int campaign = 1 + static_cast<int>(std::floor(std::min(
                                 -1.6 * std::log(rng.uniform01_pos()), 24.0)));
    const bool contacted_before = rng.uniform01() < 0.25;
    const int pdays = contacted_before ? 1 + static_cast<int>(rng.below(400)) : -1;
    const int previous = contacted_before ? 1 + static_cast<int>(rng.below(8)) : 0;
    const int poutcome =
        contacted_before ? 1 + pick(rng, {0.60, 0.17, 0.23}) : 0;

    static const double month_effect[12] = {0.2,  0.5, 1.0, -0.2, -0.7, -0.3,
                                            -0.4, 0.1, 0.9, 0.8,  0.2,  0.6};
    const double z_balance = std::log1p(std::max(balance, 0)) - 6.3;
    double score = 1.1 * (poutcome == 3) - 0.3 * (poutcome == 1)   // P_a
                   + 0.4 * z_balance + 0.6 * (housing == 0)        // P_h1
                   - 0.5 * loan + 0.5 * (contact == 0)
                   + month_effect[month]                           // P_h2
                   - 0.35 * std::log1p(campaign) + 0.35 * std::min(previous, 5)
                   + 0.6 * (education == 2) + 0.35 * (marital == 1)  // P_h3
                   + 0.7 * (age < 30 || age > 60) - 0.3 * dflt
                   + 0.6 * (job == 5 || job == 10);
    const int deposit = (score + logistic_noise(rng, 0.5) - 0.45) > 0 ? 1 : 0;

    std::string line;
    line += std::to_string(age);
    line += ',' + jobs[job];
    line += ',' + maritals[marital];
    line += ',' + educations[education];
    line += dflt ? ",yes" : ",no";
    line += ',' + std::to_string(balance);
    line += housing ? ",yes" : ",no";
    line += loan ? ",yes" : ",no";
    line += ',' + contacts[contact];
    line += ',' + std::to_string(day);
    line += ',' + months[month];
    line += ',' + std::to_string(campaign);
    line += ',' + std::to_string(pdays);
    line += ',' + std::to_string(previous);
    line += ',' + poutcomes[poutcome];
    line += deposit ? ",yes" : ",no";
    lines.push_back(std::move(line));
  }

  // Exact duplicates and a few missing markers, so the cleaning path has
  // something to do on this dataset.
  lines.push_back(lines[100]);
  lines.push_back(lines[2500]);
  lines.push_back(lines[7000]);
  auto poke_missing = [&](std::size_t row, int field) {
    std::string& line = lines[row];
    std::size_t begin = 0;
    for (int f = 0; f < field; ++f) begin = line.find(',', begin) + 1;
    const std::size_t end = line.find(',', begin);
    line.replace(begin, end - begin, "?");
  };
  poke_missing(42, 5);
  poke_missing(999, 1);
  poke_missing(3333, 8);
  poke_missing(8080, 12);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << "age,job,marital,education,default,balance,housing,loan,contact,day,"
         "month,campaign,pdays,previous,poutcome,deposit\n";
  for (const auto& line : lines) out << line << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data";
  std::filesystem::create_directories(dir);
  write_heart(dir / "heart.csv");
  write_bank(dir / "bank_marketing.csv");
  std::printf("wrote %s and %s\n", (dir / "heart.csv").c_str(),
              (dir / "bank_marketing.csv").c_str());
  return 0;
}
