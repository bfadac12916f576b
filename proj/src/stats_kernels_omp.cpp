#include "pesc/stats_kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pesc::stats::kernels {

bool parallel_enabled() noexcept {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<double> cross_pearson_omp(ColumnView x, ColumnView y) {
  std::vector<double> r(x.cols * y.cols);
  const auto cells = static_cast<long long>(r.size());
  const auto q = y.cols;
#pragma omp parallel for schedule(static)
  for (long long cell = 0; cell < cells; ++cell) {
    const auto i = static_cast<std::size_t>(cell) / q;
    const auto j = static_cast<std::size_t>(cell) % q;
    r[static_cast<std::size_t>(cell)] = pearson_pair(x.column(i), y.column(j));
  }
  return r;
}

std::vector<double> covariance_omp(ColumnView x) {
  const std::size_t p = x.cols;
  std::vector<double> mean(p);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < static_cast<long long>(p); ++c) {
    const auto col = x.column(static_cast<std::size_t>(c));
    double s = 0.0;
    for (double v : col) s += v;
    mean[static_cast<std::size_t>(c)] = s / static_cast<double>(col.size());
  }
  std::vector<double> cov(p * p);
  const double denom = static_cast<double>(x.rows - 1);
#pragma omp parallel for schedule(dynamic)
  for (long long cell = 0; cell < static_cast<long long>(p * p); ++cell) {
    const auto a = static_cast<std::size_t>(cell) / p;
    const auto b = static_cast<std::size_t>(cell) % p;
    if (b < a) continue;
    const auto ca = x.column(a);
    const auto cb = x.column(b);
    double s = 0.0;
    for (std::size_t k = 0; k < x.rows; ++k) s += (ca[k] - mean[a]) * (cb[k] - mean[b]);
    cov[a * p + b] = cov[b * p + a] = s / denom;
  }
  return cov;
}

StrategyCounts tally_omp(std::span<const Dialogue> dialogues) {
  StrategyCounts counts{};
  const auto n = static_cast<long long>(dialogues.size());
#pragma omp parallel
  {
    StrategyCounts local{};
#pragma omp for schedule(static) nowait
    for (long long i = 0; i < n; ++i) {
      for (const auto& u : dialogues[static_cast<std::size_t>(i)].utterances) {
        if (u.role == Role::supporter && u.strategy) ++local[static_cast<std::size_t>(*u.strategy)];
      }
    }
    // Integer sums are order-independent.
#pragma omp critical
    for (std::size_t s = 0; s < kStrategyCount; ++s) counts[s] += local[s];
  }
  return counts;
}

}  // namespace pesc::stats::kernels
