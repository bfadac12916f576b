#include "pesc/reports.hpp"

#include <fmt/format.h>

namespace pesc::reports {

std::string fixed(std::optional<double> v, int digits) {
  if (!v) return "NA";
  // Avoid "-0.000000".
  auto s = fmt::format("{:.{}f}", *v, digits);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string sci(std::optional<double> v, int digits) {
  if (!v) return "NA";
  return fmt::format("{:.{}e}", *v, digits);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace {

template <class Cell>
std::string matrix_csv(const stats::Matrix6& m, Cell cell) {
  std::string out = "HEXACO";
  for (auto d : dimensions_of(Family::csi)) out += fmt::format(",{}", d.name());
  out += '\n';
  const auto rows = dimensions_of(Family::hexaco);
  for (std::size_t i = 0; i < kDimsPerFamily; ++i) {
    out += rows[i].name();
    for (std::size_t j = 0; j < kDimsPerFamily; ++j) out += "," + cell(m[i][j]);
    out += '\n';
  }
  return out;
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

}  // namespace

std::string correlation_r_csv(const stats::CorrelationReport& rep) {
  return matrix_csv(rep.r, [](std::optional<double> v) { return fixed(v); });
}

std::string correlation_p_csv(const stats::CorrelationReport& rep) {
  return matrix_csv(rep.p, [](std::optional<double> v) { return sci(v); });
}

std::string alignment_md(const stats::CorrelationReport& rep, std::string_view title) {
  std::string out = fmt::format("# {}\n\nProfiles: {}\n\n", title, rep.n);
  out += "| HEXACO \\ CSI |";
  for (auto d : dimensions_of(Family::csi)) out += fmt::format(" {} |", d.abbreviation());
  out += "\n|---|";
  for (std::size_t j = 0; j < kDimsPerFamily; ++j) out += "---:|";
  out += '\n';
  const auto rows = dimensions_of(Family::hexaco);
  for (std::size_t i = 0; i < kDimsPerFamily; ++i) {
    out += fmt::format("| {} |", rows[i].abbreviation());
    for (std::size_t j = 0; j < kDimsPerFamily; ++j) out += fmt::format(" {} |", fixed(rep.r[i][j], 2));
    out += '\n';
  }
  out += "\n## Alignment\n\n";
  out += "| HEXACO | strongest CSI | r | expected CSI | expected sign | r at expected | match | sign ok |\n";
  out += "|---|---|---:|---|---|---:|---|---|\n";
  for (const auto& a : rep.alignments) {
    const auto& want = stats::expected_for(a.hexaco);
    const Dimension h(a.hexaco);
    const Dimension e(want.csi);
    if (!a.defined) {
      out += fmt::format("| {} | skipped: {} | NA | {} | {} | NA | no | no |\n", h.name(), a.skipped_reason,
                         e.name(), want.sign > 0 ? "+" : "-");
      continue;
    }
    out += fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} |\n", h.name(), Dimension(a.best_csi).name(),
                       fixed(a.r_value, 4), e.name(), want.sign > 0 ? "+" : "-", fixed(a.expected_r, 4),
                       yes_no(a.matches_expected), yes_no(a.sign_ok));
  }
  if (!rep.undefined_dimensions.empty()) {
    out += "\nUndefined (constant) dimensions:";
    for (auto d : rep.undefined_dimensions) out += " " + d.qualified_name();
    out += '\n';
  }
  out += fmt::format("\nVerdict: {}/6 aligned\n", rep.aligned_count());
  return out;
}

std::string trait_shift_csv(const stats::TraitShiftReport& rep) {
  std::string out = "dimension,n_original,n_extracted,mean_original,mean_extracted,mean_diff,cohens_d,welch_t,p\n";
  for (const auto& r : rep.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.dimension.qualified_name(), r.n_original, r.n_extracted,
                       fixed(r.mean_original), fixed(r.mean_extracted), fixed(r.mean_diff), fixed(r.cohens_d),
                       fixed(r.welch_t), sci(r.p));
  }
  return out;
}

std::string trait_shift_md(const stats::TraitShiftReport& rep) {
  std::string out = "# Trait shift (extracted - original)\n\n";
  out += "| dimension | n | original | extracted | diff | Cohen's d | Welch t | p |\n";
  out += "|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& r : rep.rows) {
    out += fmt::format("| {} | {}/{} | {} | {} | {} | {} | {} | {} |\n", r.dimension.qualified_name(), r.n_original,
                       r.n_extracted, fixed(r.mean_original, 3), fixed(r.mean_extracted, 3), fixed(r.mean_diff, 3),
                       r.cohens_d ? fixed(r.cohens_d, 3) : "undefined", fixed(r.welch_t, 3), sci(r.p, 3));
  }
  return out;
}

std::string violin_csv(std::span<const TraitProfile> original, std::span<const TraitProfile> extracted) {
  std::string out = "group,persona_id";
  for (auto d : all_dimensions()) out += "," + d.qualified_name();
  out += '\n';
  auto rows = [&](std::span<const TraitProfile> ps, std::string_view group) {
    for (const auto& p : ps) {
      out += fmt::format("{},{}", group, csv_escape(p.persona_id));
      for (auto d : all_dimensions()) out += "," + fixed(p.score(d), 4);
      out += '\n';
    }
  };
  rows(original, "original");
  rows(extracted, "extracted");
  return out;
}

std::string projection_csv(std::span<const std::string> ids, std::span<const stats::Point2> points) {
  std::string out = "persona_id,pc1,pc2\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    out += fmt::format("{},{},{}\n", csv_escape(k < ids.size() ? ids[k] : std::to_string(k)), fixed(points[k][0]),
                       fixed(points[k][1]));
  }
  return out;
}

std::string spread_md(double no_persona, double with_persona, std::size_t n_no_persona, std::size_t n_with_persona,
                      const std::array<double, 2>& explained) {
  std::string out = "# Spread of HEXACO profiles in the shared 2D PCA space\n\n";
  out += fmt::format("Explained variance ratio: PC1 {} PC2 {}\n\n", fixed(explained[0], 4), fixed(explained[1], 4));
  out += "| group | n | spread (trace of covariance) |\n|---|---:|---:|\n";
  out += fmt::format("| no persona | {} | {} |\n", n_no_persona, fixed(no_persona));
  out += fmt::format("| with persona | {} | {} |\n\n", n_with_persona, fixed(with_persona));
  const char* cmp = no_persona < with_persona ? "<" : (no_persona > with_persona ? ">" : "=");
  out += fmt::format("spread(no persona) {} spread(with persona): {} {} {}\n", cmp, fixed(no_persona), cmp,
                     fixed(with_persona));
  return out;
}

std::string strategy_distribution_csv(const stats::StrategyDistribution& a, std::string_view a_name,
                                      const stats::StrategyDistribution& b, std::string_view b_name) {
  std::string out = fmt::format("strategy,{0}_count,{0}_proportion,{1}_count,{1}_proportion\n", a_name, b_name);
  for (auto s : all_strategies()) {
    out += fmt::format("{},{},{},{},{}\n", csv_escape(strategy_label(s)), a.count(s), fixed(a.proportion(s)),
                       b.count(s), fixed(b.proportion(s)));
  }
  out += fmt::format("total,{},{},{},{}\n", a.total_turns, fixed(a.total_turns ? 1.0 : 0.0), b.total_turns,
                     fixed(b.total_turns ? 1.0 : 0.0));
  return out;
}

std::string strategy_comparison_md(const stats::StrategyDistribution& a, std::string_view a_name,
                                   const stats::StrategyDistribution& b, std::string_view b_name,
                                   const std::optional<stats::ChiSquareResult>& test, std::string_view test_note) {
  std::string out = "# Strategy distribution\n\n";
  out += fmt::format("| strategy | {} | {} |\n|---|---:|---:|\n", a_name, b_name);
  for (auto s : all_strategies()) {
    out += fmt::format("| {} | {}% | {}% |\n", strategy_table_label(s), fixed(100.0 * a.proportion(s), 2),
                       fixed(100.0 * b.proportion(s), 2));
  }
  out += fmt::format("| supporter turns | {} | {} |\n\n", a.total_turns, b.total_turns);
  if (test) {
    out += fmt::format("Chi-square homogeneity: chi2 = {}, dof = {}, p = {}\n", fixed(test->chi2, 4), test->dof,
                       sci(test->p, 4));
  } else {
    out += fmt::format("Chi-square homogeneity: not computed ({})\n", test_note);
  }
  return out;
}

std::string corpus_stats_csv(const persona::CorpusStats& s) {
  return fmt::format(
      "num_personas,avg_words_description,avg_words_problem,num_with_age,num_with_gender,num_with_occupation\n"
      "{},{},{},{},{},{}\n",
      s.num_personas, fixed(s.avg_words_description, 2), fixed(s.avg_words_problem, 2), s.num_with_age,
      s.num_with_gender, s.num_with_occupation);
}

std::string corpus_stats_md(const persona::CorpusStats& s, std::string_view corpus_name) {
  std::string out = "# Persona card statistics\n\n";
  out += fmt::format("| | {} |\n|---|---:|\n", corpus_name);
  out += fmt::format("| # personas | {} |\n", s.num_personas);
  out += fmt::format("| avg. words (description) | {} |\n", fixed(s.avg_words_description, 2));
  out += fmt::format("| avg. words (problem) | {} |\n", fixed(s.avg_words_problem, 2));
  out += fmt::format("| with age | {} |\n", s.num_with_age);
  out += fmt::format("| with gender | {} |\n", s.num_with_gender);
  out += fmt::format("| with occupation | {} |\n", s.num_with_occupation);
  return out;
}

}  // namespace pesc::reports
