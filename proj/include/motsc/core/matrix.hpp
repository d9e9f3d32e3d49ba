#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "motsc/core/error.hpp"

namespace motsc::core {

// Dense row-major matrix of doubles. Just storage plus bounds-checked row
// access; all arithmetic lives in motsc::kernels.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw contract_error("Matrix: negative dimension");
  }

  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  std::span<double> row_span(int r) { return {row(r), static_cast<size_t>(cols)}; }
  std::span<const double> row_span(int r) const { return {row(r), static_cast<size_t>(cols)}; }

  void set_row(int r, std::span<const double> values) {
    if (static_cast<int>(values.size()) != cols)
      throw contract_error("Matrix::set_row: length mismatch");
    std::copy(values.begin(), values.end(), row(r));
  }

  void resize(int r, int c) {
    if (r < 0 || c < 0) throw contract_error("Matrix: negative dimension");
    rows = r;
    cols = c;
    data.assign(static_cast<size_t>(r) * c, 0.0);
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace motsc::core
