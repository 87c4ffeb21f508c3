#include "fedbank/matrix.hpp"

#include <cstdint>

namespace fedbank {

namespace {
// Below this many multiply-adds the fork/join overhead beats the speedup.
constexpr std::size_t kParallelCutoff = 1u << 14;
}  // namespace

void matvec_rows_serial(const Matrix& x, std::span<const std::size_t> rows,
                        std::span<const double> theta, double bias,
                        std::span<double> out) {
  const std::size_t cols = x.cols;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* row = x.data.data() + rows[i] * cols;
    double acc = bias;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * theta[j];
    out[i] = acc;
  }
}

void matvec_rows(const Matrix& x, std::span<const std::size_t> rows,
                 std::span<const double> theta, double bias,
                 std::span<double> out) {
  const std::size_t cols = x.cols;
  const std::int64_t n = static_cast<std::int64_t>(rows.size());
#pragma omp parallel for schedule(static) if (rows.size() * cols > kParallelCutoff)
  for (std::int64_t i = 0; i < n; ++i) {
    const double* row = x.data.data() + rows[i] * cols;
    double acc = bias;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * theta[j];
    out[i] = acc;
  }
}

void apply_gradient_serial(const Matrix& x, std::span<const std::size_t> rows,
                           std::span<const double> g, double eta, double l2,
                           std::span<double> theta) {
  const std::size_t cols = x.cols;
  for (std::size_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      acc += x.data[rows[i] * cols + j] * g[i];
    }
    theta[j] -= eta * (acc + l2 * theta[j]);
  }
}

void apply_gradient(const Matrix& x, std::span<const std::size_t> rows,
                    std::span<const double> g, double eta, double l2,
                    std::span<double> theta) {
  const std::size_t cols = x.cols;
  const std::int64_t m = static_cast<std::int64_t>(cols);
// Column-parallel: each theta[j] is one fixed-order sum over the batch, so
// the result does not depend on the thread count.
#pragma omp parallel for schedule(static) if (rows.size() * cols > kParallelCutoff)
  for (std::int64_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      acc += x.data[rows[i] * cols + j] * g[i];
    }
    theta[j] -= eta * (acc + l2 * theta[j]);
  }
}

}  // namespace fedbank
