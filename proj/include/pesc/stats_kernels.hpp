#pragma once

// Numeric kernels behind the stats module. Every kernel has a serial
// reference and an OpenMP version. The parallel versions split work by
// output cell (never by reduction across threads), so both produce bitwise
// identical results and reports do not depend on the thread count.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "pesc/core.hpp"

namespace pesc::stats::kernels {

// Column-major rows x cols matrix view.
struct ColumnView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> column(std::size_t c) const { return data.subspan(c * rows, rows); }
};

// Product-moment correlation of two equal-length columns; NaN when either
// column is constant.
double pearson_pair(std::span<const double> x, std::span<const double> y) noexcept;

// r[i * y.cols + j] = pearson(x column i, y column j).
std::vector<double> cross_pearson_serial(ColumnView x, ColumnView y);
std::vector<double> cross_pearson_omp(ColumnView x, ColumnView y);

// Sample (n - 1) covariance, cols x cols, row-major.
std::vector<double> covariance_serial(ColumnView x);
std::vector<double> covariance_omp(ColumnView x);

// Strategy counts over the supporter turns of `dialogues`.
using StrategyCounts = std::array<std::size_t, kStrategyCount>;
StrategyCounts tally_serial(std::span<const Dialogue> dialogues);
StrategyCounts tally_omp(std::span<const Dialogue> dialogues);

// Eigen-decomposition of a symmetric n x n row-major matrix by cyclic
// Jacobi rotations. Values sorted descending; vectors[k] is the unit
// eigenvector for values[k].
struct SymmetricEigen {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
};
SymmetricEigen jacobi_eigen(std::vector<double> matrix, std::size_t n);

// True when built with OpenMP.
bool parallel_enabled() noexcept;
int max_threads() noexcept;

}  // namespace pesc::stats::kernels
