#pragma once

// Plain CSV / Markdown renderings of the analytics. Every number goes
// through a fixed-precision format so reruns are byte-identical.

#include <span>
#include <string>

#include "pesc/persona.hpp"
#include "pesc/stats.hpp"

namespace pesc::reports {

// "0.540000"; "NA" for an absent value.
std::string fixed(std::optional<double> v, int digits = 6);
// "1.234560e-05"; "NA" for an absent value.
std::string sci(std::optional<double> v, int digits = 6);

std::string csv_escape(std::string_view field);

std::string correlation_r_csv(const stats::CorrelationReport& rep);
std::string correlation_p_csv(const stats::CorrelationReport& rep);
// Matrix table plus one verdict line per HEXACO dimension and "N/6 aligned".
std::string alignment_md(const stats::CorrelationReport& rep, std::string_view title);

std::string trait_shift_csv(const stats::TraitShiftReport& rep);
std::string trait_shift_md(const stats::TraitShiftReport& rep);

// One row per profile: group, persona_id, then the twelve dimension scores.
std::string violin_csv(std::span<const TraitProfile> original, std::span<const TraitProfile> extracted);

std::string projection_csv(std::span<const std::string> ids, std::span<const stats::Point2> points);
std::string spread_md(double no_persona, double with_persona, std::size_t n_no_persona,
                      std::size_t n_with_persona, const std::array<double, 2>& explained);

std::string strategy_distribution_csv(const stats::StrategyDistribution& a, std::string_view a_name,
                                      const stats::StrategyDistribution& b, std::string_view b_name);
std::string strategy_comparison_md(const stats::StrategyDistribution& a, std::string_view a_name,
                                   const stats::StrategyDistribution& b, std::string_view b_name,
                                   const std::optional<stats::ChiSquareResult>& test,
                                   std::string_view test_note);

std::string corpus_stats_csv(const persona::CorpusStats& s);
std::string corpus_stats_md(const persona::CorpusStats& s, std::string_view corpus_name);

}  // namespace pesc::reports
