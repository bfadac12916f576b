#pragma once

// Orchestration behind the pesc command line: settings resolution, backend
// session setup, the five subcommands and their run manifests.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pesc/error.hpp"
#include "pesc/inventory.hpp"
#include "pesc/llm.hpp"
#include "pesc/prompts.hpp"

namespace pesc::app {

// Bad invocation: missing or unreadable input, invalid option value.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Settings {
  std::string backend = "live";  // live | mock
  std::string endpoint = llm::BackendConfig{}.endpoint;
  std::string model = llm::BackendConfig{}.model;
  double temperature = 0.0;
  int max_retries = 3;
  int max_in_flight = 4;
  int backoff_ms = 500;
  std::filesystem::path cache_dir;  // empty: <out_dir>/cache
  bool no_cache = false;
  std::vector<std::filesystem::path> inventories;  // empty: bundled test inventories
  std::size_t turn_budget = 16;
  std::filesystem::path seed_file;
  std::filesystem::path out_dir = "pesc-out";
  std::filesystem::path mock_fixtures;  // empty: bundled fixtures
  std::filesystem::path prompts_dir;    // empty: builtin templates only
  bool batched = false;
  double max_missing_fraction = 0.2;

  std::string api_key;  // from the environment only; never written out

  // Everything except the API key.
  nlohmann::json snapshot() const;
};

// Layered resolution: defaults < environment < config file < flags. Each
// layer is a JSON object keyed like Settings::snapshot(). Unknown keys and
// mistyped values raise UsageError naming the source.
Settings resolve_settings(const nlohmann::json& flags, const std::optional<std::filesystem::path>& config_file,
                          const std::map<std::string, std::string>& environment);

// Current process environment, restricted to the PESC_* / OPENAI_API_KEY variables.
std::map<std::string, std::string> read_environment();

std::filesystem::path bundled_data_dir();

// Outcome of one subcommand, mirrored into manifest.json.
struct RunReport {
  std::string subcommand;
  std::string run_id;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::vector<std::string> item_failures;
  std::vector<std::string> warnings;
  std::vector<std::string> fatal_errors;
  std::vector<std::filesystem::path> outputs;
  nlohmann::json summary = nlohmann::json::object();
  std::string console;  // human-readable summary for stdout

  int exit_code() const { return fatal_errors.empty() ? 0 : 1; }
};

struct ExtractArgs {
  std::filesystem::path corpus;
  std::string kind = "esconv";  // esconv | cams | dreaddit
};

struct MeasureArgs {
  std::optional<std::filesystem::path> personas;
  std::optional<std::filesystem::path> profiles;  // skip administration
};

struct ConsistencyArgs {
  // Seeds come from Settings::seed_file.
};

struct AblationArgs {
  std::size_t n = 0;
  // Persona-injected group: measured profiles, or expanded from Settings::seed_file.
  std::optional<std::filesystem::path> profiles;
};

struct StrategiesArgs {
  std::filesystem::path histories;
  std::filesystem::path traits;
  std::string contrast = "pt";  // pt | hexaco-csi
  std::optional<std::size_t> max_histories;
};

RunReport cmd_extract(const Settings& settings, const ExtractArgs& args);
RunReport cmd_measure(const Settings& settings, const MeasureArgs& args);
RunReport cmd_consistency(const Settings& settings, const ConsistencyArgs& args);
RunReport cmd_ablation(const Settings& settings, const AblationArgs& args);
RunReport cmd_strategies(const Settings& settings, const StrategiesArgs& args);

}  // namespace pesc::app
