#include <algorithm>
#include <cmath>
#include <limits>

#include "pesc/error.hpp"
#include "pesc/stats_kernels.hpp"

namespace pesc::stats::kernels {

double pearson_pair(std::span<const double> x, std::span<const double> y) noexcept {
  const std::size_t n = x.size();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> cross_pearson_serial(ColumnView x, ColumnView y) {
  std::vector<double> r(x.cols * y.cols);
  for (std::size_t i = 0; i < x.cols; ++i) {
    for (std::size_t j = 0; j < y.cols; ++j) {
      r[i * y.cols + j] = pearson_pair(x.column(i), y.column(j));
    }
  }
  return r;
}

namespace {

double column_mean(std::span<const double> c) {
  double s = 0.0;
  for (double v : c) s += v;
  return s / static_cast<double>(c.size());
}

}  // namespace

std::vector<double> covariance_serial(ColumnView x) {
  const std::size_t p = x.cols;
  std::vector<double> mean(p);
  for (std::size_t c = 0; c < p; ++c) mean[c] = column_mean(x.column(c));
  std::vector<double> cov(p * p);
  const double denom = static_cast<double>(x.rows - 1);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) {
      const auto ca = x.column(a);
      const auto cb = x.column(b);
      double s = 0.0;
      for (std::size_t k = 0; k < x.rows; ++k) s += (ca[k] - mean[a]) * (cb[k] - mean[b]);
      cov[a * p + b] = cov[b * p + a] = s / denom;
    }
  }
  return cov;
}

StrategyCounts tally_serial(std::span<const Dialogue> dialogues) {
  StrategyCounts counts{};
  for (const auto& d : dialogues) {
    for (const auto& u : d.utterances) {
      if (u.role == Role::supporter && u.strategy) ++counts[static_cast<std::size_t>(*u.strategy)];
    }
  }
  return counts;
}

SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n) {
  if (a.size() != n * n) throw ValidationError("jacobi_eigen: matrix size mismatch");
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  auto off_diagonal = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
    return s;
  };
  double scale = 0.0;
  for (double x : a) scale += x * x;

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (off_diagonal() <= 1e-30 * std::max(scale, 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        // Rotation angle that zeroes a[p][q].
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return a[l * n + l] > a[r * n + r]; });
  SymmetricEigen out;
  for (std::size_t idx : order) {
    out.values.push_back(a[idx * n + idx]);
    std::vector<double> vec(n);
    for (std::size_t k = 0; k < n; ++k) vec[k] = v[k * n + idx];
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

}  // namespace pesc::stats::kernels
