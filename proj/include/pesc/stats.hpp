#pragma once

// Deterministic analytics over trait profiles and annotated dialogues.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pesc/core.hpp"
#include "pesc/stats_kernels.hpp"

namespace pesc::stats {

// Throws UndefinedStatistic when lengths differ, n < 3 or either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

// Two-tailed p of r under the null, Student's t with n - 2 degrees of freedom.
double pearson_p(double r, std::size_t n);

// Theory-expected CSI partner of each HEXACO dimension.
struct ExpectedPair {
  HexacoDim hexaco;
  CsiDim csi;
  int sign;  // +1 or -1
};
const std::array<ExpectedPair, kDimsPerFamily>& expected_alignment();
const ExpectedPair& expected_for(HexacoDim d);

struct Alignment {
  HexacoDim hexaco = HexacoDim::HonestyHumility;
  bool defined = false;
  std::string skipped_reason;  // set when !defined
  CsiDim best_csi = CsiDim::Expressiveness;
  double r_value = 0.0;           // r at the argmax cell
  double expected_r = 0.0;        // r at the expected cell
  bool matches_expected = false;  // argmax is the expected partner
  bool sign_ok = false;           // sign at the expected cell is the expected sign

  bool aligned() const { return defined && matches_expected && sign_ok; }
};

using Matrix6 = std::array<std::array<std::optional<double>, kDimsPerFamily>, kDimsPerFamily>;

struct CorrelationReport {
  Matrix6 r;  // [hexaco][csi]; absent when either dimension is constant
  Matrix6 p;
  std::size_t n = 0;
  std::array<Alignment, kDimsPerFamily> alignments;
  std::vector<Dimension> undefined_dimensions;

  std::size_t aligned_count() const;
};

// Requires >= 3 complete profiles. Constant dimensions do not throw; they
// are listed in undefined_dimensions and their cells left empty.
CorrelationReport correlation_matrix(std::span<const TraitProfile> profiles);

struct ShiftRow {
  Dimension dimension = HexacoDim::HonestyHumility;
  std::size_t n_original = 0;
  std::size_t n_extracted = 0;
  double mean_original = 0.0;
  double mean_extracted = 0.0;
  double mean_diff = 0.0;  // extracted - original
  std::optional<double> cohens_d;
  std::optional<double> welch_t;
  std::optional<double> p;
};

struct TraitShiftReport {
  std::vector<ShiftRow> rows;  // one per dimension with data in both groups
};

TraitShiftReport trait_shift(std::span<const TraitProfile> original,
                             std::span<const TraitProfile> extracted);

// Per-group summaries, exposed for tests.
struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};
std::optional<WelchResult> welch(std::span<const double> a, std::span<const double> b);
std::optional<double> cohens_d(std::span<const double> a, std::span<const double> b);

using Point6 = std::array<double, kDimsPerFamily>;
using Point2 = std::array<double, 2>;

// Principal axes fitted on one point set; can project other sets.
struct PcaModel {
  Point6 mean{};
  std::array<Point6, 2> axes{};
  std::array<double, 2> explained_variance_ratio{};

  Point2 project(const Point6& p) const;
  std::vector<Point2> project(std::span<const Point6> points) const;
};

PcaModel fit_pca2(std::span<const Point6> points);

struct PcaResult {
  std::vector<Point2> projected;
  std::array<double, 2> explained_variance_ratio{};
};

PcaResult pca2(std::span<const Point6> points);

// HEXACO scores of a complete profile.
Point6 hexaco_point(const TraitProfile& profile);

// Trace of the 2x2 sample covariance.
double spread(std::span<const Point2> points);

struct StrategyDistribution {
  std::array<double, kStrategyCount> proportions{};
  kernels::StrategyCounts counts{};
  std::size_t total_turns = 0;

  double proportion(Strategy s) const { return proportions[static_cast<std::size_t>(s)]; }
  std::size_t count(Strategy s) const { return counts[static_cast<std::size_t>(s)]; }
};

StrategyDistribution strategy_distribution(std::span<const Dialogue> dialogues);
StrategyDistribution distribution_from_counts(const kernels::StrategyCounts& counts);

struct ChiSquareResult {
  double chi2 = 0.0;
  double p = 1.0;
  std::size_t dof = 0;
  std::vector<Strategy> categories;  // surviving columns
};

ChiSquareResult distribution_compare(const StrategyDistribution& a, const StrategyDistribution& b);

}  // namespace pesc::stats
