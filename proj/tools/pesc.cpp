// pesc command line. Every subcommand writes its reports and a
// manifest.json into --out-dir.

#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pesc/app.hpp"

namespace {

using nlohmann::json;

struct CommonFlags {
  std::string backend, endpoint, model, cache_dir, seed_file, out_dir, mock_fixtures, prompts_dir, config;
  double temperature = 0.0;
  int max_in_flight = 0;
  int max_retries = 0;
  std::size_t turn_budget = 0;
  std::vector<std::string> inventories;
  bool batched = false;
  bool no_cache = false;
};

// Only flags the user actually passed enter the flag layer.
json flag_layer(CLI::App& app, const CommonFlags& f) {
  json j = json::object();
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--backend")) j["backend"] = f.backend;
  if (given("--endpoint")) j["endpoint"] = f.endpoint;
  if (given("--model")) j["model"] = f.model;
  if (given("--temperature")) j["temperature"] = f.temperature;
  if (given("--cache-dir")) j["cache_dir"] = f.cache_dir;
  if (given("--no-cache")) j["no_cache"] = f.no_cache;
  if (given("--max-in-flight")) j["max_in_flight"] = f.max_in_flight;
  if (given("--max-retries")) j["max_retries"] = f.max_retries;
  if (given("--inventory")) j["inventories"] = f.inventories;
  if (given("--turn-budget")) j["turn_budget"] = f.turn_budget;
  if (given("--seed-file")) j["seed_file"] = f.seed_file;
  if (given("--out-dir")) j["out_dir"] = f.out_dir;
  if (given("--mock-fixtures")) j["mock_fixtures"] = f.mock_fixtures;
  if (given("--prompts-dir")) j["prompts_dir"] = f.prompts_dir;
  if (given("--batched")) j["batched"] = f.batched;
  return j;
}

int report(const pesc::app::RunReport& rep, const std::string& out_dir) {
  if (!rep.console.empty()) std::cout << rep.console << '\n';
  for (const auto& f : rep.item_failures) std::cerr << "item failed: " << f << '\n';
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& e : rep.fatal_errors) std::cerr << "error: " << e << '\n';
  std::cerr << fmt::format("{}: run {} - {} ok, {} failed; manifest at {}/manifest.json\n", rep.subcommand,
                           rep.run_id, rep.succeeded, rep.failed, out_dir);
  return rep.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persona-aware emotional support conversation toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  CommonFlags f;

  app.add_option("--backend", f.backend, "live or mock")->check(CLI::IsMember({"live", "mock"}));
  app.add_option("--endpoint", f.endpoint, "chat-completions URL for the live backend");
  app.add_option("--model", f.model, "model name");
  app.add_option("--temperature", f.temperature, "sampling temperature");
  app.add_option("--cache-dir", f.cache_dir, "response cache directory (default <out-dir>/cache)");
  app.add_flag("--no-cache", f.no_cache, "do not read or write the response cache");
  app.add_option("--max-in-flight", f.max_in_flight, "concurrent backend requests");
  app.add_option("--max-retries", f.max_retries, "retries after the first attempt");
  app.add_option("--inventory", f.inventories, "inventory definition file (repeatable; one HEXACO, one CSI)")
      ->allow_extra_args(false);
  app.add_option("--turn-budget", f.turn_budget, "maximum utterances per synthesized dialogue");
  app.add_option("--seed-file", f.seed_file, "one persona seed per line");
  app.add_option("--out-dir", f.out_dir, "output directory");
  app.add_option("--mock-fixtures", f.mock_fixtures, "fixture file for the mock backend");
  app.add_option("--prompts-dir", f.prompts_dir, "directory of *.prompt files overriding the builtins");
  app.add_flag("--batched", f.batched, "ask all inventory items in one prompt");
  app.add_option("--config", f.config, "JSON settings file (flags override it)");

  pesc::app::ExtractArgs extract;
  auto* c_extract = app.add_subcommand("extract", "extract and filter persona cards from a corpus");
  c_extract->add_option("corpus", extract.corpus, "corpus file")->required();
  c_extract->add_option("--kind", extract.kind, "esconv, cams or dreaddit")
      ->check(CLI::IsMember({"esconv", "cams", "dreaddit"}));

  pesc::app::MeasureArgs measure;
  std::string personas_path, profiles_path;
  auto* c_measure = app.add_subcommand("measure", "administer inventories and correlate HEXACO with CSI");
  auto* o_personas = c_measure->add_option("--personas", personas_path, "persona cards to measure");
  auto* o_profiles = c_measure->add_option("--profiles", profiles_path, "already measured profiles");
  o_personas->excludes(o_profiles);

  pesc::app::ConsistencyArgs consistency;
  app.add_subcommand("consistency", "expand seeds, round-trip them through dialogue, report trait shift");

  pesc::app::AblationArgs ablation;
  std::string ablation_profiles;
  auto* c_ablation = app.add_subcommand("ablation", "compare implicit-persona and injected-persona spreads");
  c_ablation->add_option("-n,--count", ablation.n, "implicit-persona dialogues to generate")->required();
  auto* o_abl_profiles = c_ablation->add_option("--profiles", ablation_profiles, "persona-injected profiles");

  pesc::app::StrategiesArgs strategies;
  std::size_t max_histories = 0;
  auto* c_strat = app.add_subcommand("strategies", "continue histories with and without trait scores");
  c_strat->add_option("--histories", strategies.histories, "ESConv-style history file")->required();
  c_strat->add_option("--traits", strategies.traits, "profiles keyed by history id")->required();
  c_strat->add_option("--contrast", strategies.contrast, "pt or hexaco-csi")
      ->check(CLI::IsMember({"pt", "hexaco-csi"}));
  auto* o_max = c_strat->add_option("--max-histories", max_histories, "use at most this many histories");

  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<std::filesystem::path> config;
    if (!f.config.empty()) config = f.config;
    else if (const char* c = std::getenv("PESC_CONFIG"); c && *c) config = c;
    const auto settings = pesc::app::resolve_settings(flag_layer(app, f), config, pesc::app::read_environment());
    const auto out = settings.out_dir.string();

    if (c_extract->parsed()) return report(pesc::app::cmd_extract(settings, extract), out);
    if (c_measure->parsed()) {
      if (o_personas->count()) measure.personas = personas_path;
      if (o_profiles->count()) measure.profiles = profiles_path;
      return report(pesc::app::cmd_measure(settings, measure), out);
    }
    if (app.got_subcommand("consistency")) return report(pesc::app::cmd_consistency(settings, consistency), out);
    if (c_ablation->parsed()) {
      if (o_abl_profiles->count()) ablation.profiles = ablation_profiles;
      return report(pesc::app::cmd_ablation(settings, ablation), out);
    }
    if (c_strat->parsed()) {
      if (o_max->count()) strategies.max_histories = max_histories;
      return report(pesc::app::cmd_strategies(settings, strategies), out);
    }
  } catch (const pesc::app::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
