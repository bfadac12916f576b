#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "pesc/stats_kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pesc::stats::kernels {
namespace {

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> g(3.0, 1.0);
  std::vector<double> m(rows * cols);
  for (auto& v : m) v = g(rng);
  return m;
}

class ThreadCounts : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override {
#ifdef _OPENMP
    saved_ = omp_get_max_threads();
    omp_set_num_threads(GetParam());
#endif
  }
  void TearDown() override {
#ifdef _OPENMP
    omp_set_num_threads(saved_);
#endif
  }
  int saved_ = 1;
};

TEST_P(ThreadCounts, CrossPearsonBitwiseEqual) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()));
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = 3 + rng() % 200;
    const auto x = random_matrix(rng, rows, 6);
    const auto y = random_matrix(rng, rows, 6);
    const ColumnView xv{x, rows, 6};
    const ColumnView yv{y, rows, 6};
    EXPECT_TRUE(bitwise_equal(cross_pearson_serial(xv, yv), cross_pearson_omp(xv, yv)));
  }
}

TEST_P(ThreadCounts, CovarianceBitwiseEqual) {
  std::mt19937_64 rng(100 + static_cast<std::uint64_t>(GetParam()));
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = 2 + rng() % 300;
    const std::size_t cols = 1 + rng() % 12;
    const auto x = random_matrix(rng, rows, cols);
    const ColumnView xv{x, rows, cols};
    EXPECT_TRUE(bitwise_equal(covariance_serial(xv), covariance_omp(xv)));
  }
}

TEST_P(ThreadCounts, TallyEqual) {
  std::mt19937_64 rng(200 + static_cast<std::uint64_t>(GetParam()));
  std::vector<Dialogue> ds(500);
  for (auto& d : ds) {
    d.condition = Condition::with_persona_traits;
    for (std::size_t k = rng() % 10; k > 0; --k) {
      d.utterances.push_back({Role::seeker, "s", std::nullopt});
      d.utterances.push_back({Role::supporter, "t", static_cast<Strategy>(rng() % kStrategyCount)});
    }
  }
  EXPECT_EQ(tally_serial(ds), tally_omp(ds));
}

INSTANTIATE_TEST_SUITE_P(Threads, ThreadCounts, ::testing::Values(1, 2, 3, 8));

TEST(PearsonPair, ConstantColumnIsNan) {
  const std::vector<double> c{2, 2, 2, 2};
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_TRUE(std::isnan(pearson_pair(c, v)));
  EXPECT_TRUE(std::isnan(pearson_pair(v, c)));
}

TEST(CrossPearson, LayoutMatchesPairwise) {
  std::mt19937_64 rng(3);
  const std::size_t rows = 17;
  const auto x = random_matrix(rng, rows, 4);
  const auto y = random_matrix(rng, rows, 5);
  const ColumnView xv{x, rows, 4};
  const ColumnView yv{y, rows, 5};
  const auto r = cross_pearson_serial(xv, yv);
  ASSERT_EQ(r.size(), 20u);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      EXPECT_NEAR(r[i * 5 + j], oracle::pearson(xv.column(i), yv.column(j)), 1e-12);
}

TEST(Covariance, MatchesEigen) {
  std::mt19937_64 rng(4);
  const std::size_t rows = 25;
  const std::size_t cols = 6;
  const auto x = random_matrix(rng, rows, cols);
  const auto cov = covariance_serial({x, rows, cols});
  Eigen::Map<const Eigen::MatrixXd> X(x.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const Eigen::MatrixXd centred = X.rowwise() - X.colwise().mean();
  const Eigen::MatrixXd want = centred.transpose() * centred / static_cast<double>(rows - 1);
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      EXPECT_NEAR(cov[i * cols + j], want(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 1e-12);
}

TEST(Jacobi, MatchesEigenSolver) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    Eigen::MatrixXd a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = g(rng);
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m[i * n + j] = a(i, j);
    const auto eig = jacobi_eigen(m, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    for (std::size_t k = 0; k < n; ++k) {
      EXPECT_NEAR(eig.values[k], es.eigenvalues()(static_cast<Eigen::Index>(n - 1 - k)), 1e-10);
      // A v = lambda v, |v| = 1.
      Eigen::VectorXd v(n);
      for (std::size_t d = 0; d < n; ++d) v(d) = eig.vectors[k][d];
      EXPECT_NEAR(v.norm(), 1.0, 1e-12);
      EXPECT_LT((a * v - eig.values[k] * v).norm(), 1e-9);
    }
    for (std::size_t k = 1; k < n; ++k) EXPECT_GE(eig.values[k - 1], eig.values[k]);
  }
}

}  // namespace
}  // namespace pesc::stats::kernels
