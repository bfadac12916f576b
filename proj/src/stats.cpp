#include "pesc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "pesc/error.hpp"

namespace pesc::stats {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample variance (n - 1).
double variance_of(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

double two_tailed_t(double t, double df) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw UndefinedStatistic(fmt::format("pearson: length mismatch ({} vs {})", x.size(), y.size()));
  }
  if (x.size() < 3) throw UndefinedStatistic("pearson: need at least 3 values");
  const double r = kernels::pearson_pair(x, y);
  if (std::isnan(r)) throw UndefinedStatistic("pearson: constant input, correlation undefined");
  return r;
}

double pearson_p(double r, std::size_t n) {
  if (n < 3) throw UndefinedStatistic("pearson_p: need n >= 3");
  if (!(std::abs(r) <= 1.0)) throw ValidationError(fmt::format("pearson_p: |r| > 1 ({})", r));
  if (std::abs(r) == 1.0) return 0.0;
  if (r == 0.0) return 1.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  return two_tailed_t(t, df);
}

const std::array<ExpectedPair, kDimsPerFamily>& expected_alignment() {
  // Indexed by HexacoDim.
  static const std::array<ExpectedPair, kDimsPerFamily> pairs{{
      {HexacoDim::HonestyHumility, CsiDim::ImpressionManipulativeness, -1},
      {HexacoDim::Emotionality, CsiDim::Emotionality, +1},
      {HexacoDim::Extraversion, CsiDim::Expressiveness, +1},
      {HexacoDim::Agreeableness, CsiDim::VerbalAggressiveness, -1},
      {HexacoDim::Conscientiousness, CsiDim::Preciseness, +1},
      {HexacoDim::OpennessToExperience, CsiDim::Questioningness, +1},
  }};
  return pairs;
}

const ExpectedPair& expected_for(HexacoDim d) { return expected_alignment()[static_cast<std::size_t>(d)]; }

std::size_t CorrelationReport::aligned_count() const {
  return static_cast<std::size_t>(
      std::count_if(alignments.begin(), alignments.end(), [](const Alignment& a) { return a.aligned(); }));
}

CorrelationReport correlation_matrix(std::span<const TraitProfile> profiles) {
  if (profiles.size() < 3) {
    throw UndefinedStatistic(fmt::format("correlation_matrix: need at least 3 profiles, got {}", profiles.size()));
  }
  const std::size_t n = profiles.size();
  std::vector<double> hex(n * kDimsPerFamily);
  std::vector<double> csi(n * kDimsPerFamily);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& prof = profiles[k];
    if (!prof.complete()) {
      throw ValidationError(fmt::format("correlation_matrix: profile '{}' is partial", prof.persona_id));
    }
    for (std::size_t d = 0; d < kDimsPerFamily; ++d) {
      hex[d * n + k] = *prof.hexaco[d];
      csi[d * n + k] = *prof.csi[d];
    }
  }
  const kernels::ColumnView hv{hex, n, kDimsPerFamily};
  const kernels::ColumnView cv{csi, n, kDimsPerFamily};
  const auto cells = kernels::cross_pearson_omp(hv, cv);

  CorrelationReport rep;
  rep.n = n;

  std::array<bool, kDimsPerFamily> hex_const{};
  std::array<bool, kDimsPerFamily> csi_const{};
  auto is_constant = [](std::span<const double> c) {
    return std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); });
  };
  for (std::size_t d = 0; d < kDimsPerFamily; ++d) {
    hex_const[d] = is_constant(hv.column(d));
    csi_const[d] = is_constant(cv.column(d));
  }
  for (std::size_t d = 0; d < kDimsPerFamily; ++d)
    if (hex_const[d]) rep.undefined_dimensions.push_back(Dimension::from_index(Family::hexaco, d));
  for (std::size_t d = 0; d < kDimsPerFamily; ++d)
    if (csi_const[d]) rep.undefined_dimensions.push_back(Dimension::from_index(Family::csi, d));

  for (std::size_t i = 0; i < kDimsPerFamily; ++i) {
    for (std::size_t j = 0; j < kDimsPerFamily; ++j) {
      const double r = cells[i * kDimsPerFamily + j];
      if (std::isnan(r)) continue;
      rep.r[i][j] = r;
      rep.p[i][j] = pearson_p(r, n);
    }
  }

  for (std::size_t i = 0; i < kDimsPerFamily; ++i) {
    auto& a = rep.alignments[i];
    a.hexaco = static_cast<HexacoDim>(i);
    const auto& want = expected_for(a.hexaco);
    const auto ej = static_cast<std::size_t>(want.csi);
    if (hex_const[i]) {
      a.skipped_reason = fmt::format("HEXACO.{} is constant across profiles",
                                     Dimension(a.hexaco).name());
      continue;
    }
    if (!rep.r[i][ej]) {
      a.skipped_reason = fmt::format("expected partner CSI.{} is constant across profiles",
                                     Dimension(want.csi).name());
      continue;
    }
    std::size_t best = kDimsPerFamily;
    for (std::size_t j = 0; j < kDimsPerFamily; ++j) {
      if (!rep.r[i][j]) continue;
      // Ties go to the lower index.
      if (best == kDimsPerFamily || std::abs(*rep.r[i][j]) > std::abs(*rep.r[i][best])) best = j;
    }
    a.defined = true;
    a.best_csi = static_cast<CsiDim>(best);
    a.r_value = *rep.r[i][best];
    a.expected_r = *rep.r[i][ej];
    a.matches_expected = best == ej;
    a.sign_ok = (want.sign > 0) ? a.expected_r > 0.0 : a.expected_r < 0.0;
  }
  return rep;
}

std::optional<double> cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty() || a.size() + b.size() < 3) return std::nullopt;
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double ssa = a.size() > 1 ? variance_of(a, ma) * static_cast<double>(a.size() - 1) : 0.0;
  const double ssb = b.size() > 1 ? variance_of(b, mb) * static_cast<double>(b.size() - 1) : 0.0;
  const double pooled = std::sqrt((ssa + ssb) / static_cast<double>(a.size() + b.size() - 2));
  if (pooled == 0.0) return std::nullopt;
  return (mb - ma) / pooled;
}

std::optional<WelchResult> welch(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) return std::nullopt;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double va = variance_of(a, ma) / na;
  const double vb = variance_of(b, mb) / nb;
  const double se2 = va + vb;
  if (se2 == 0.0) return std::nullopt;
  WelchResult w;
  w.t = (mb - ma) / std::sqrt(se2);
  w.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  w.p = two_tailed_t(w.t, w.df);
  return w;
}

TraitShiftReport trait_shift(std::span<const TraitProfile> original,
                             std::span<const TraitProfile> extracted) {
  if (original.empty() || extracted.empty()) {
    throw UndefinedStatistic("trait_shift: both groups must be non-empty");
  }
  const auto& inv = original.front().provenance.inventory_id;
  auto check_inventory = [&](const TraitProfile& p) {
    if (p.provenance.inventory_id != inv) {
      throw ValidationError(fmt::format("trait_shift: profile '{}' uses inventory '{}', expected '{}'",
                                        p.persona_id, p.provenance.inventory_id, inv));
    }
  };
  for (const auto& p : original) check_inventory(p);
  for (const auto& p : extracted) check_inventory(p);

  TraitShiftReport rep;
  for (const auto dim : all_dimensions()) {
    std::vector<double> a;
    std::vector<double> b;
    for (const auto& p : original)
      if (auto s = p.score(dim)) a.push_back(*s);
    for (const auto& p : extracted)
      if (auto s = p.score(dim)) b.push_back(*s);
    if (a.empty() || b.empty()) continue;
    ShiftRow row;
    row.dimension = dim;
    row.n_original = a.size();
    row.n_extracted = b.size();
    row.mean_original = mean_of(a);
    row.mean_extracted = mean_of(b);
    row.mean_diff = row.mean_extracted - row.mean_original;
    row.cohens_d = cohens_d(a, b);
    if (auto w = welch(a, b)) {
      row.welch_t = w->t;
      row.p = w->p;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

Point2 PcaModel::project(const Point6& p) const {
  Point2 out{};
  for (std::size_t k = 0; k < 2; ++k) {
    double s = 0.0;
    for (std::size_t d = 0; d < kDimsPerFamily; ++d) s += (p[d] - mean[d]) * axes[k][d];
    out[k] = s;
  }
  return out;
}

std::vector<Point2> PcaModel::project(std::span<const Point6> points) const {
  std::vector<Point2> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(project(p));
  return out;
}

PcaModel fit_pca2(std::span<const Point6> points) {
  if (points.size() < 3) {
    throw UndefinedStatistic(fmt::format("pca2: need at least 3 points, got {}", points.size()));
  }
  const std::size_t n = points.size();
  std::vector<double> cols(n * kDimsPerFamily);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t d = 0; d < kDimsPerFamily; ++d) cols[d * n + k] = points[k][d];
  const auto cov = kernels::covariance_omp({cols, n, kDimsPerFamily});

  double trace = 0.0;
  for (std::size_t d = 0; d < kDimsPerFamily; ++d) trace += cov[d * kDimsPerFamily + d];
  if (trace <= 0.0) throw UndefinedStatistic("pca2: all points identical, zero variance");

  const auto eig = kernels::jacobi_eigen(cov, kDimsPerFamily);
  PcaModel m;
  for (std::size_t d = 0; d < kDimsPerFamily; ++d) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += points[k][d];
    m.mean[d] = s / static_cast<double>(n);
  }
  for (std::size_t k = 0; k < 2; ++k) {
    auto axis = eig.vectors[k];
    // Fix the sign: the largest-magnitude component is positive.
    std::size_t big = 0;
    for (std::size_t d = 1; d < kDimsPerFamily; ++d)
      if (std::abs(axis[d]) > std::abs(axis[big])) big = d;
    const double flip = axis[big] < 0 ? -1.0 : 1.0;
    for (std::size_t d = 0; d < kDimsPerFamily; ++d) m.axes[k][d] = flip * axis[d];
    m.explained_variance_ratio[k] = std::clamp(std::max(eig.values[k], 0.0) / trace, 0.0, 1.0);
  }
  return m;
}

PcaResult pca2(std::span<const Point6> points) {
  const auto m = fit_pca2(points);
  return {m.project(points), m.explained_variance_ratio};
}

Point6 hexaco_point(const TraitProfile& profile) {
  if (!profile.complete(Family::hexaco)) {
    throw ValidationError(fmt::format("profile '{}' lacks HEXACO scores", profile.persona_id));
  }
  Point6 p{};
  for (std::size_t d = 0; d < kDimsPerFamily; ++d) p[d] = *profile.hexaco[d];
  return p;
}

double spread(std::span<const Point2> points) {
  if (points.size() < 2) throw UndefinedStatistic("spread: need at least 2 points");
  double total = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    double m = 0.0;
    for (const auto& p : points) m += p[k];
    m /= static_cast<double>(points.size());
    double s = 0.0;
    for (const auto& p : points) s += (p[k] - m) * (p[k] - m);
    total += s / static_cast<double>(points.size() - 1);
  }
  return total;
}

StrategyDistribution distribution_from_counts(const kernels::StrategyCounts& counts) {
  StrategyDistribution d;
  d.counts = counts;
  for (auto c : counts) d.total_turns += c;
  if (d.total_turns == 0) return d;
  for (std::size_t s = 0; s < kStrategyCount; ++s)
    d.proportions[s] = static_cast<double>(counts[s]) / static_cast<double>(d.total_turns);
  return d;
}

StrategyDistribution strategy_distribution(std::span<const Dialogue> dialogues) {
  return distribution_from_counts(kernels::tally_omp(dialogues));
}

ChiSquareResult distribution_compare(const StrategyDistribution& a, const StrategyDistribution& b) {
  if (a.total_turns == 0 || b.total_turns == 0) {
    throw UndefinedStatistic("distribution_compare: both groups need at least one labeled turn");
  }
  ChiSquareResult res;
  for (std::size_t s = 0; s < kStrategyCount; ++s)
    if (a.counts[s] + b.counts[s] > 0) res.categories.push_back(static_cast<Strategy>(s));
  if (res.categories.size() < 2) {
    throw UndefinedStatistic("distribution_compare: fewer than 2 strategies observed");
  }
  const double na = static_cast<double>(a.total_turns);
  const double nb = static_cast<double>(b.total_turns);
  const double total = na + nb;
  for (auto s : res.categories) {
    const auto idx = static_cast<std::size_t>(s);
    const double col = static_cast<double>(a.counts[idx] + b.counts[idx]);
    const double ea = na * col / total;
    const double eb = nb * col / total;
    const double oa = static_cast<double>(a.counts[idx]);
    const double ob = static_cast<double>(b.counts[idx]);
    res.chi2 += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
  }
  res.dof = res.categories.size() - 1;
  boost::math::chi_squared dist(static_cast<double>(res.dof));
  res.p = res.chi2 <= 0.0 ? 1.0 : std::clamp(boost::math::cdf(boost::math::complement(dist, res.chi2)), 0.0, 1.0);
  return res;
}

}  // namespace pesc::stats
