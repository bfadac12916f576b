#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pesc/app.hpp"
#include "pesc/corpus.hpp"
#include "pesc/stats.hpp"
#include "support.hpp"

namespace pesc::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

Settings mock_settings(const fs::path& out) {
  Settings s = resolve_settings(json{{"backend", "mock"}, {"backoff_ms", 0}}, std::nullopt, {});
  s.out_dir = out;
  return s;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(testing::read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

class SourceDateEpoch : public ::testing::Test {
 protected:
  void SetUp() override { setenv("SOURCE_DATE_EPOCH", "1700000000", 1); }
  void TearDown() override { unsetenv("SOURCE_DATE_EPOCH"); }
};

// ----------------------------------------------------------------------------
// settings

TEST(Settings, PrecedenceDefaultsEnvConfigFlags) {
  TempDir dir;
  testing::write_file(dir / "cfg.json", R"({"model": "from-config", "turn_budget": 10, "cache_dir": "rel/cache"})");
  const std::map<std::string, std::string> env{
      {"PESC_MODEL", "from-env"}, {"PESC_TEMPERATURE", "0.7"}, {"PESC_TURN_BUDGET", "8"}, {"PESC_UNRELATED", "x"}};

  const auto d = resolve_settings(json::object(), std::nullopt, {});
  EXPECT_EQ(d.backend, "live");
  EXPECT_EQ(d.turn_budget, 16u);
  EXPECT_EQ(d.max_missing_fraction, 0.2);

  const auto e = resolve_settings(json::object(), std::nullopt, env);
  EXPECT_EQ(e.model, "from-env");
  EXPECT_EQ(e.temperature, 0.7);
  EXPECT_EQ(e.turn_budget, 8u);

  const auto c = resolve_settings(json::object(), dir / "cfg.json", env);
  EXPECT_EQ(c.model, "from-config");
  EXPECT_EQ(c.temperature, 0.7);
  EXPECT_EQ(c.turn_budget, 10u);
  EXPECT_EQ(c.cache_dir, (dir / "rel/cache").lexically_normal());

  const auto f = resolve_settings(json{{"model", "from-flag"}}, dir / "cfg.json", env);
  EXPECT_EQ(f.model, "from-flag");
  EXPECT_EQ(f.turn_budget, 10u);
}

TEST(Settings, ApiKeyOnlyFromEnvironment) {
  const auto a = resolve_settings(json::object(), std::nullopt, {{"OPENAI_API_KEY", "sk-openai"}});
  EXPECT_EQ(a.api_key, "sk-openai");
  const auto b = resolve_settings(json::object(), std::nullopt, {{"OPENAI_API_KEY", "sk-o"}, {"PESC_API_KEY", "sk-p"}});
  EXPECT_EQ(b.api_key, "sk-p");
  EXPECT_FALSE(b.snapshot().dump().find("sk-p") != std::string::npos);
  TempDir dir;
  testing::write_file(dir / "cfg.json", R"({"api_key": "sk-leak"})");
  EXPECT_THROW(resolve_settings(json::object(), dir / "cfg.json", {}), UsageError);
  EXPECT_THROW(resolve_settings(json{{"api_key", "x"}}, std::nullopt, {}), UsageError);
}

TEST(Settings, BadValuesAreUsageErrors) {
  EXPECT_THROW(resolve_settings(json{{"backend", "carrier-pigeon"}}, std::nullopt, {}), UsageError);
  EXPECT_THROW(resolve_settings(json{{"turn_budget", 1}}, std::nullopt, {}), UsageError);
  EXPECT_THROW(resolve_settings(json{{"max_in_flight", 0}}, std::nullopt, {}), UsageError);
  EXPECT_THROW(resolve_settings(json{{"temperature", 3.0}}, std::nullopt, {}), UsageError);
  EXPECT_THROW(resolve_settings(json{{"no_such_thing", 1}}, std::nullopt, {}), UsageError);
  EXPECT_THROW(resolve_settings(json::object(), std::nullopt, {{"PESC_MAX_RETRIES", "three"}}), UsageError);
  EXPECT_THROW(resolve_settings(json::object(), fs::path("/nonexistent/cfg.json"), {}), UsageError);
  EXPECT_EQ(resolve_settings(json::object(), std::nullopt, {{"PESC_NO_CACHE", "yes"}}).no_cache, true);
}

// ----------------------------------------------------------------------------
// usage errors

TEST(Commands, UsageErrorsBeforeAnyOutput) {
  TempDir dir;
  const auto s = mock_settings(dir / "out");
  EXPECT_THROW(cmd_extract(s, {dir / "missing.json", "esconv"}), UsageError);
  EXPECT_THROW(cmd_extract(s, {testing::data_dir() / "fixtures" / "esconv_sample.json", "reddit"}), UsageError);
  EXPECT_THROW(cmd_measure(s, {}), UsageError);
  EXPECT_THROW(cmd_ablation(s, {0, std::nullopt}), UsageError);
  EXPECT_THROW(cmd_ablation(s, {5, std::nullopt}), UsageError);  // no injected group
  StrategiesArgs sa;
  sa.histories = testing::data_dir() / "fixtures" / "esconv_sample.json";
  sa.traits = dir / "none.jsonl";
  EXPECT_THROW(cmd_strategies(s, sa), UsageError);
  auto live = s;
  live.backend = "live";
  EXPECT_THROW(cmd_extract(live, {testing::data_dir() / "fixtures" / "esconv_sample.json", "esconv"}), UsageError);
  EXPECT_FALSE(fs::exists(dir / "out" / "manifest.json"));
}

// ----------------------------------------------------------------------------
// extract

TEST_F(SourceDateEpoch, ExtractEmptyCorpusGivesZeroStats) {
  TempDir dir;
  testing::write_file(dir / "empty.json", "[]");
  const auto rep = cmd_extract(mock_settings(dir / "out"), {dir / "empty.json", "esconv"});
  EXPECT_EQ(rep.exit_code(), 0);
  const auto rows = read_csv(dir / "out" / "corpus_stats.csv");
  ASSERT_EQ(rows.size(), 2u);
  for (std::size_t k = 1; k < rows[1].size(); ++k) EXPECT_EQ(std::stod(rows[1][k]), 0.0) << rows[0][k];
  EXPECT_TRUE(load_corpus<PersonaCard>(dir / "out" / "personas.jsonl").empty());
}

TEST_F(SourceDateEpoch, ExtractBundledSample) {
  TempDir dir;
  const auto rep = cmd_extract(mock_settings(dir / "out"), {testing::data_dir() / "fixtures" / "esconv_sample.json", "esconv"});
  EXPECT_EQ(rep.exit_code(), 0);
  EXPECT_EQ(rep.succeeded, 12u);
  const auto kept = load_corpus<PersonaCard>(dir / "out" / "personas.jsonl");
  EXPECT_GT(kept.size(), 0u);
  EXPECT_LE(kept.size(), 12u);
  const auto manifest = json::parse(testing::read_file(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["run_id"], rep.run_id);
  EXPECT_EQ(manifest["api_key_present"], false);
  EXPECT_EQ(manifest["started"], "2023-11-14T22:13:20Z");
}

TEST_F(SourceDateEpoch, ExtractTotalFailureIsFatal) {
  TempDir dir;
  testing::write_file(dir / "fx.json", R"({"default": "I cannot help with that."})");
  auto s = mock_settings(dir / "out");
  s.mock_fixtures = dir / "fx.json";
  const auto rep = cmd_extract(s, {testing::data_dir() / "fixtures" / "esconv_sample.json", "esconv"});
  EXPECT_EQ(rep.exit_code(), 1);
  EXPECT_EQ(rep.failed, 12u);
  EXPECT_EQ(rep.item_failures.size(), 12u);
}

// ----------------------------------------------------------------------------
// measure from profiles

std::vector<TraitProfile> aligned_profiles(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::uniform_real_distribution<double> u(1.5, 4.5);
  std::vector<TraitProfile> ps;
  for (std::size_t k = 0; k < n; ++k) {
    std::array<double, 6> c{};
    for (auto& v : c) v = u(rng);
    std::array<double, 6> h{};
    for (const auto& e : stats::expected_alignment()) {
      const double base = c[static_cast<std::size_t>(e.csi)];
      h[static_cast<std::size_t>(e.hexaco)] = std::clamp((e.sign > 0 ? base : 6.0 - base) + noise(rng), 1.0, 5.0);
    }
    ps.push_back(testing::make_profile("p" + std::to_string(k), h, c));
  }
  return ps;
}

TEST_F(SourceDateEpoch, MeasureFromProfilesSixOfSixAndOracleCsv) {
  TempDir dir;
  const auto ps = aligned_profiles(30, 3);
  save_corpus(ps, dir / "profiles.jsonl");
  const auto rep = cmd_measure(mock_settings(dir / "out"), {std::nullopt, dir / "profiles.jsonl"});
  EXPECT_EQ(rep.exit_code(), 0);
  const auto md = testing::read_file(dir / "out" / "alignment.md");
  EXPECT_NE(md.find("6/6 aligned"), std::string::npos);

  const auto r = read_csv(dir / "out" / "correlation_r.csv");
  const auto p = read_csv(dir / "out" / "correlation_p.csv");
  ASSERT_EQ(r.size(), 7u);
  EXPECT_EQ(r[0][0], "HEXACO");
  for (std::size_t i = 0; i < 6; ++i) {
    ASSERT_EQ(r[i + 1].size(), 7u);
    for (std::size_t j = 0; j < 6; ++j) {
      std::vector<double> x;
      std::vector<double> y;
      for (const auto& prof : ps) {
        x.push_back(*prof.hexaco[i]);
        y.push_back(*prof.csi[j]);
      }
      const double want = oracle::pearson(x, y);
      EXPECT_NEAR(std::stod(r[i + 1][j + 1]), want, 5e-7);
      const double want_p = oracle::pearson_p(want, ps.size());
      EXPECT_NEAR(std::stod(p[i + 1][j + 1]), want_p, 0.05 * want_p + 1e-300);
    }
  }
}

TEST_F(SourceDateEpoch, MeasureConstantDimensionIsFatalButReported) {
  TempDir dir;
  auto ps = aligned_profiles(10, 4);
  for (auto& p : ps) p.csi[0] = 3.0;
  save_corpus(ps, dir / "profiles.jsonl");
  const auto rep = cmd_measure(mock_settings(dir / "out"), {std::nullopt, dir / "profiles.jsonl"});
  EXPECT_EQ(rep.exit_code(), 1);
  EXPECT_TRUE(fs::exists(dir / "out" / "alignment.md"));
  const auto r = read_csv(dir / "out" / "correlation_r.csv");
  EXPECT_EQ(r[1][1], "NA");
}

// ----------------------------------------------------------------------------
// ablation and strategies

TEST_F(SourceDateEpoch, AblationWritesProjectionsAndSpread) {
  TempDir dir;
  save_corpus(aligned_profiles(6, 5), dir / "injected.jsonl");
  const auto rep = cmd_ablation(mock_settings(dir / "out"), {5, dir / "injected.jsonl"});
  EXPECT_EQ(rep.exit_code(), 0) << (rep.fatal_errors.empty() ? "" : rep.fatal_errors[0]);
  for (const char* f : {"dialogues_no_persona.jsonl", "profiles_no_persona.jsonl", "pca_no_persona.csv",
                        "pca_with_persona.csv", "spread.md"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
  const auto a = read_csv(dir / "out" / "pca_no_persona.csv");
  const auto b = read_csv(dir / "out" / "pca_with_persona.csv");
  EXPECT_EQ(a[0], (std::vector<std::string>{"persona_id", "pc1", "pc2"}));
  EXPECT_EQ(a.size(), 6u);
  EXPECT_EQ(b.size(), 7u);
}

TEST_F(SourceDateEpoch, StrategiesIdenticalRepliesGiveZeroChi2) {
  TempDir dir;
  testing::write_file(dir / "fx.json", json{{"default", "Seeker: hi\nSupporter [Question]: How are you?\n"
                                                        "Seeker: tired\nSupporter [Information]: Rest helps.\n"}}
                                           .dump());
  auto s = mock_settings(dir / "out");
  s.mock_fixtures = dir / "fx.json";
  std::vector<TraitProfile> traits;
  for (int k = 0; k < 4; ++k) {
    traits.push_back(testing::make_profile("esconv-000" + std::to_string(k), {3, 3, 3, 3, 3, 3}, {2, 2, 2, 2, 2, 2}));
  }
  save_corpus(traits, dir / "traits.jsonl");
  StrategiesArgs args;
  args.histories = testing::data_dir() / "fixtures" / "esconv_sample.json";
  args.traits = dir / "traits.jsonl";
  const auto rep = cmd_strategies(s, args);
  EXPECT_EQ(rep.exit_code(), 0);
  EXPECT_EQ(rep.summary["pairs"], 4);
  EXPECT_EQ(rep.summary["chi2"], 0.0);
  EXPECT_EQ(rep.warnings.size(), 8u);  // eight histories without a profile
  EXPECT_TRUE(fs::exists(dir / "out" / "dialogues_with_pt.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "out" / "dialogues_without_pt.jsonl"));
  const auto pairs = testing::read_file(dir / "out" / "paired_export.jsonl");
  EXPECT_EQ(std::count(pairs.begin(), pairs.end(), '\n'), 4);

  args.contrast = "hexaco-csi";
  args.max_histories = 2;
  s.out_dir = dir / "out2";
  const auto rep2 = cmd_strategies(s, args);
  EXPECT_EQ(rep2.summary["pairs"], 2);
  EXPECT_TRUE(fs::exists(dir / "out2" / "dialogues_hexaco_only.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "out2" / "dialogues_csi_only.jsonl"));
}

// ----------------------------------------------------------------------------
// end to end

std::map<std::string, std::string> snapshot_outputs(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).string();
    if (rel.find("cache") != std::string::npos || e.path().filename() == "manifest.json") continue;
    out[rel] = testing::read_file(e.path());
  }
  return out;
}

std::vector<std::string> run_chain(const fs::path& root) {
  const auto data = testing::data_dir() / "fixtures";
  auto s = mock_settings(root / "extract");
  s.seed_file = data / "persona_seeds.txt";
  std::vector<std::string> ids;
  auto check = [&](const RunReport& r) {
    EXPECT_EQ(r.exit_code(), 0) << r.subcommand << ": " << (r.fatal_errors.empty() ? "" : r.fatal_errors[0]);
    ids.push_back(r.run_id);
  };
  check(cmd_extract(s, {data / "esconv_sample.json", "esconv"}));
  s.out_dir = root / "measure";
  check(cmd_measure(s, {root / "extract" / "personas.jsonl", std::nullopt}));
  s.out_dir = root / "consistency";
  check(cmd_consistency(s, {}));
  s.out_dir = root / "ablation";
  check(cmd_ablation(s, {5, std::nullopt}));
  s.out_dir = root / "strategies";
  StrategiesArgs sa;
  sa.histories = data / "esconv_sample.json";
  sa.traits = root / "measure" / "profiles.jsonl";
  check(cmd_strategies(s, sa));
  return ids;
}

TEST_F(SourceDateEpoch, EndToEndIsDeterministic) {
  TempDir a;
  TempDir b;
  const auto ids_a = run_chain(a.path());
  const auto ids_b = run_chain(b.path());
  const auto out_a = snapshot_outputs(a.path());
  const auto out_b = snapshot_outputs(b.path());
  ASSERT_GT(out_a.size(), 20u);
  ASSERT_EQ(out_a.size(), out_b.size());
  for (const auto& [name, content] : out_a) {
    ASSERT_TRUE(out_b.count(name)) << name;
    EXPECT_EQ(content, out_b.at(name)) << name;
  }
  // measure and strategies read files from their own run directory, so
  // their run ids hash identical content and must agree too.
  EXPECT_EQ(ids_a, ids_b);
}

}  // namespace
}  // namespace pesc::app
