#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fedbank {

// Dense row-major matrix. Small enough on purpose: the largest dataset in
// scope is ~11k rows, so a flat vector beats any library dependency here.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  std::span<double> row(std::size_t r) {
    return {data.data() + r * cols, cols};
  }
};

// ---------------------------------------------------------------------------
// Data-parallel kernels. Each has an OpenMP version and a serial reference;
// both must produce bit-identical results (each output element is computed
// by an independent, fixed-order reduction), which the test suite and the
// kernel benchmark check. The parallel versions fall back to the serial path
// for small inputs where thread fork/join would dominate.
// ---------------------------------------------------------------------------

// out[i] = dot(X.row(rows[i]), theta) + bias
void matvec_rows(const Matrix& x, std::span<const std::size_t> rows,
                 std::span<const double> theta, double bias,
                 std::span<double> out);
void matvec_rows_serial(const Matrix& x, std::span<const std::size_t> rows,
                        std::span<const double> theta, double bias,
                        std::span<double> out);

// theta[j] -= eta * (sum_i X(rows[i], j) * g[i] + l2 * theta[j])
void apply_gradient(const Matrix& x, std::span<const std::size_t> rows,
                    std::span<const double> g, double eta, double l2,
                    std::span<double> theta);
void apply_gradient_serial(const Matrix& x, std::span<const std::size_t> rows,
                           std::span<const double> g, double eta, double l2,
                           std::span<double> theta);

}  // namespace fedbank
