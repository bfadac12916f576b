#include "pesc/app.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "pesc/corpus.hpp"
#include "pesc/http_backend.hpp"
#include "pesc/parallel.hpp"
#include "pesc/persona.hpp"
#include "pesc/reports.hpp"
#include "pesc/stats.hpp"
#include "pesc/synthesis.hpp"

#ifndef PESC_DATA_DIR
#define PESC_DATA_DIR "data"
#endif

extern char** environ;

namespace pesc::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<Family, 2> kBothFamilies{Family::hexaco, Family::csi};

const std::set<std::string>& path_keys() {
  static const std::set<std::string> keys{"cache_dir", "seed_file", "out_dir", "mock_fixtures", "prompts_dir"};
  return keys;
}

// Converts an environment string to the JSON type of `like`.
json coerce_string(const std::string& key, const std::string& text, const json& like, std::string_view source) {
  try {
    if (like.is_boolean()) {
      const auto n = normalize_label(text);
      if (n == "1" || n == "true" || n == "yes" || n == "on") return true;
      if (n == "0" || n == "false" || n == "no" || n == "off" || n.empty()) return false;
      throw std::invalid_argument("not a boolean");
    }
    if (like.is_number_float()) return std::stod(text);
    if (like.is_number_integer() || like.is_number_unsigned()) {
      std::size_t used = 0;
      const auto v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
    if (like.is_array()) {
      json arr = json::array();
      std::stringstream ss(text);
      std::string part;
      while (std::getline(ss, part, ':'))
        if (!part.empty()) arr.push_back(part);
      return arr;
    }
  } catch (const std::exception&) {
    throw UsageError(fmt::format("{}: invalid value '{}' for {}", source, text, key));
  }
  return text;
}

void apply_layer(json& merged, const json& layer, std::string_view source, const fs::path& base_dir = {}) {
  if (!layer.is_object()) throw UsageError(fmt::format("{}: settings must be a JSON object", source));
  for (const auto& [key, value] : layer.items()) {
    if (!merged.contains(key)) throw UsageError(fmt::format("{}: unknown setting '{}'", source, key));
    const auto& like = merged[key];
    json v = value;
    if (v.is_string() && !like.is_string()) v = coerce_string(key, v.get<std::string>(), like, source);
    const bool ok = (like.is_string() && v.is_string()) || (like.is_boolean() && v.is_boolean()) ||
                    (like.is_number() && v.is_number()) || (like.is_array() && v.is_array());
    if (!ok) throw UsageError(fmt::format("{}: setting '{}' has the wrong type", source, key));
    if (!base_dir.empty()) {
      if (path_keys().count(key) && !v.get<std::string>().empty() && fs::path(v.get<std::string>()).is_relative()) {
        v = (base_dir / v.get<std::string>()).lexically_normal().string();
      } else if (key == "inventories") {
        for (auto& e : v)
          if (e.is_string() && fs::path(e.get<std::string>()).is_relative())
            e = (base_dir / e.get<std::string>()).lexically_normal().string();
      }
    }
    merged[key] = std::move(v);
  }
}

}  // namespace

json Settings::snapshot() const {
  json inv = json::array();
  for (const auto& p : inventories) inv.push_back(p.string());
  return {{"backend", backend},
          {"endpoint", endpoint},
          {"model", model},
          {"temperature", temperature},
          {"max_retries", max_retries},
          {"max_in_flight", max_in_flight},
          {"backoff_ms", backoff_ms},
          {"cache_dir", cache_dir.string()},
          {"no_cache", no_cache},
          {"inventories", std::move(inv)},
          {"turn_budget", turn_budget},
          {"seed_file", seed_file.string()},
          {"out_dir", out_dir.string()},
          {"mock_fixtures", mock_fixtures.string()},
          {"prompts_dir", prompts_dir.string()},
          {"batched", batched},
          {"max_missing_fraction", max_missing_fraction}};
}

Settings resolve_settings(const json& flags, const std::optional<fs::path>& config_file,
                          const std::map<std::string, std::string>& environment) {
  json merged = Settings{}.snapshot();
  json env_layer = json::object();
  std::string api_key;
  for (const auto& [name, value] : environment) {
    if (name == "PESC_API_KEY" || name == "OPENAI_API_KEY") continue;
    if (name.rfind("PESC_", 0) != 0) continue;
    auto key = name.substr(5);
    for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (key == "config") continue;
    if (!merged.contains(key)) continue;  // foreign PESC_* variables are not ours to reject
    env_layer[key] = value;
  }
  if (auto it = environment.find("PESC_API_KEY"); it != environment.end() && !it->second.empty()) {
    api_key = it->second;
  } else if (auto it2 = environment.find("OPENAI_API_KEY"); it2 != environment.end()) {
    api_key = it2->second;
  }
  apply_layer(merged, env_layer, "environment");

  if (config_file) {
    std::ifstream in(*config_file);
    if (!in) throw UsageError(fmt::format("cannot read config file '{}'", config_file->string()));
    json cfg;
    try {
      cfg = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError(fmt::format("config file '{}': {}", config_file->string(), e.what()));
    }
    if (cfg.contains("api_key")) {
      throw UsageError("config files may not contain an API key; set PESC_API_KEY in the environment");
    }
    apply_layer(merged, cfg, config_file->string(), config_file->parent_path().empty() ? fs::path(".") : config_file->parent_path());
  }
  apply_layer(merged, flags, "command line");

  Settings s;
  s.backend = merged["backend"].get<std::string>();
  s.endpoint = merged["endpoint"].get<std::string>();
  s.model = merged["model"].get<std::string>();
  s.temperature = merged["temperature"].get<double>();
  s.max_retries = merged["max_retries"].get<int>();
  s.max_in_flight = merged["max_in_flight"].get<int>();
  s.backoff_ms = merged["backoff_ms"].get<int>();
  s.cache_dir = merged["cache_dir"].get<std::string>();
  s.no_cache = merged["no_cache"].get<bool>();
  for (const auto& e : merged["inventories"]) s.inventories.emplace_back(e.get<std::string>());
  const auto budget = merged["turn_budget"].get<long long>();
  if (budget < 2) throw UsageError("turn_budget must be at least 2");
  s.turn_budget = static_cast<std::size_t>(budget);
  s.seed_file = merged["seed_file"].get<std::string>();
  s.out_dir = merged["out_dir"].get<std::string>();
  s.mock_fixtures = merged["mock_fixtures"].get<std::string>();
  s.prompts_dir = merged["prompts_dir"].get<std::string>();
  s.batched = merged["batched"].get<bool>();
  s.max_missing_fraction = merged["max_missing_fraction"].get<double>();
  s.api_key = std::move(api_key);

  if (s.backend != "live" && s.backend != "mock") {
    throw UsageError(fmt::format("backend must be 'live' or 'mock', got '{}'", s.backend));
  }
  if (s.max_in_flight < 1) throw UsageError("max_in_flight must be at least 1");
  if (s.max_retries < 0) throw UsageError("max_retries must be non-negative");
  if (s.temperature < 0.0 || s.temperature > 2.0) throw UsageError("temperature must lie in [0, 2]");
  if (s.max_missing_fraction < 0.0 || s.max_missing_fraction > 1.0) {
    throw UsageError("max_missing_fraction must lie in [0, 1]");
  }
  return s;
}

std::map<std::string, std::string> read_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    std::string_view kv(*e);
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    const auto name = kv.substr(0, eq);
    if (name.rfind("PESC_", 0) == 0 || name == "OPENAI_API_KEY") out.emplace(name, kv.substr(eq + 1));
  }
  return out;
}

fs::path bundled_data_dir() {
  if (const char* d = std::getenv("PESC_DATA_DIR"); d && *d) return d;
  return PESC_DATA_DIR;
}

// ---------------------------------------------------------------------------

namespace {

struct Session {
  PromptSet prompts;
  std::shared_ptr<llm::Backend> backend;
  std::unique_ptr<llm::Client> client;
  inventory::AdministerOptions admin;
  std::size_t workers = 1;

  PipelineContext ctx() const { return {*client, prompts}; }
};

void require_readable(const fs::path& path, std::string_view what) {
  std::error_code ec;
  if (path.empty()) throw UsageError(fmt::format("{}: no path given", what));
  if (!fs::is_regular_file(path, ec)) {
    throw UsageError(fmt::format("{} '{}' is not a readable file", what, path.string()));
  }
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("{} '{}' cannot be opened", what, path.string()));
}

fs::path mock_fixture_path(const Settings& s) {
  return s.mock_fixtures.empty() ? bundled_data_dir() / "fixtures" / "mock_fixtures.json" : s.mock_fixtures;
}

std::vector<fs::path> inventory_paths(const Settings& s) {
  if (!s.inventories.empty()) return s.inventories;
  return {bundled_data_dir() / "inventories" / "hexaco_test12.inv", bundled_data_dir() / "inventories" / "csi_test12.inv"};
}

std::unique_ptr<Session> open_session(const Settings& s) {
  auto session = std::make_unique<Session>();
  if (!s.prompts_dir.empty()) {
    if (!fs::is_directory(s.prompts_dir)) {
      throw UsageError(fmt::format("prompts directory '{}' does not exist", s.prompts_dir.string()));
    }
    session->prompts = PromptSet::with_overrides(s.prompts_dir);
  } else {
    session->prompts = PromptSet::builtin();
  }

  llm::BackendConfig cfg;
  cfg.endpoint = s.endpoint;
  cfg.model = s.model;
  cfg.temperature = s.temperature;
  cfg.max_retries = s.max_retries;
  cfg.max_in_flight = s.max_in_flight;
  cfg.backoff_base = std::chrono::milliseconds(s.backoff_ms);
  cfg.api_key = s.api_key;

  if (s.backend == "mock") {
    const auto fixtures = mock_fixture_path(s);
    require_readable(fixtures, "mock fixture file");
    session->backend = llm::MockBackend::from_file(fixtures);
  } else {
    if (s.api_key.empty()) {
      throw UsageError("the live backend needs an API key in PESC_API_KEY or OPENAI_API_KEY");
    }
    session->backend = std::make_shared<llm::HttpBackend>(s.endpoint, s.api_key);
  }
  std::optional<llm::ResponseCache> cache;
  if (!s.no_cache) cache.emplace(s.cache_dir.empty() ? s.out_dir / "cache" : s.cache_dir);
  session->client = std::make_unique<llm::Client>(session->backend, cfg, std::move(cache));
  session->admin.batched = s.batched;
  session->admin.max_missing_fraction = s.max_missing_fraction;
  session->workers = static_cast<std::size_t>(s.max_in_flight);
  return session;
}

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return llm::sha256_hex(ss.str());
}

// Hash of everything that determines the outputs. Paths, cache and
// concurrency settings are left out, so the same inputs in another
// directory, with or without a warm cache, give the same id.
std::string compute_run_id(const std::string& subcommand, const Settings& s, const std::vector<fs::path>& inputs,
                           const PromptSet& prompts, const json& args) {
  json basis{{"backend", s.backend},  {"model", s.model},           {"temperature", s.temperature},
             {"turn_budget", s.turn_budget}, {"batched", s.batched}, {"max_missing_fraction", s.max_missing_fraction}};
  if (s.backend == "live") basis["endpoint"] = s.endpoint;
  json content = json::array();
  for (const auto& p : inputs) content.push_back(file_sha256(p));
  for (const auto& p : inventory_paths(s))
    if (fs::is_regular_file(p)) content.push_back(file_sha256(p));
  if (s.backend == "mock") content.push_back(file_sha256(mock_fixture_path(s)));
  json plain_args = json::object();
  for (const auto& [k, v] : args.items())
    if (!v.is_string()) plain_args[k] = v;  // string arguments are paths, covered by content
  json key{{"subcommand", subcommand}, {"settings", basis}, {"content", content}, {"prompts", prompts.hashes()},
           {"args", plain_args}};
  return llm::sha256_hex(key.dump()).substr(0, 16);
}

void write_text(RunReport& rep, const fs::path& path, const std::string& content) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << content;
  }
  fs::rename(tmp, path);
  rep.outputs.push_back(path);
}

template <class T>
void write_corpus(RunReport& rep, const fs::path& path, const std::vector<T>& records) {
  save_corpus(records, path);
  rep.outputs.push_back(path);
}

void write_jsonl(RunReport& rep, const fs::path& path, const std::vector<json>& lines) {
  std::string text;
  for (const auto& l : lines) text += l.dump() + "\n";
  write_text(rep, path, text);
}

inventory::InventoryPair load_inventories(const Settings& s) {
  const auto paths = inventory_paths(s);
  std::vector<inventory::Inventory> invs;
  for (const auto& p : paths) {
    require_readable(p, "inventory file");
    try {
      invs.push_back(inventory::load_inventory(p));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  try {
    return inventory::pair_inventories(std::move(invs));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

// Runs fn over n items with per-item isolation. Failures land in the report
// in index order, whatever the scheduling.
template <class F>
auto attempt_all(Session& session, RunReport& rep, std::size_t n, F&& fn,
                 const std::function<std::string(std::size_t)>& label) {
  using R = std::invoke_result_t<F&, std::size_t>;
  using Outcome = std::pair<std::optional<R>, std::string>;
  auto outcomes = parallel_map(n, session.workers, [&](std::size_t i) -> Outcome {
    try {
      return {fn(i), {}};
    } catch (const UsageError&) {
      throw;
    } catch (const Error& e) {
      return {std::nullopt, e.what()};
    }
  });
  std::vector<std::optional<R>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (outcomes[i].first) {
      ++rep.succeeded;
    } else {
      ++rep.failed;
      rep.item_failures.push_back(fmt::format("{}: {}", label(i), outcomes[i].second));
    }
    out.push_back(std::move(outcomes[i].first));
  }
  return out;
}

json client_stats_json(const llm::Client& c) {
  const auto st = c.stats();
  return {{"requests", st.requests},
          {"cache_hits", st.cache_hits},
          {"backend_attempts", st.backend_attempts},
          {"failures", st.failures}};
}

// Shared shell of every subcommand: session, run id, error capture and
// the manifest. Usage errors propagate before anything is written.
template <class Body>
RunReport run_command(const std::string& subcommand, const Settings& settings, const std::vector<fs::path>& inputs,
                      const json& args, Body&& body) {
  for (const auto& p : inputs) require_readable(p, "input");
  auto session = open_session(settings);
  std::error_code ec;
  fs::create_directories(settings.out_dir, ec);
  if (ec) throw UsageError(fmt::format("cannot create output directory '{}': {}", settings.out_dir.string(), ec.message()));

  RunReport rep;
  rep.subcommand = subcommand;
  rep.run_id = compute_run_id(subcommand, settings, inputs, session->prompts, args);
  const auto started = run_timestamp();
  try {
    body(*session, rep);
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    rep.fatal_errors.emplace_back(e.what());
  } catch (const std::exception& e) {
    rep.fatal_errors.emplace_back(fmt::format("internal error: {}", e.what()));
  }

  json in = json::array();
  for (const auto& p : inputs) in.push_back({{"path", p.string()}, {"sha256", file_sha256(p)}});
  json out = json::array();
  for (const auto& p : rep.outputs) out.push_back(p.filename().string());
  json manifest{{"run_id", rep.run_id},
                {"subcommand", subcommand},
                {"arguments", args},
                {"config", settings.snapshot()},
                {"api_key_present", !settings.api_key.empty()},
                {"inputs", in},
                {"outputs", out},
                {"template_hashes", session->prompts.hashes()},
                {"backend", {{"kind", session->backend->kind()}, {"id", session->backend->id()}}},
                {"started", started},
                {"ended", run_timestamp()},
                {"tallies", {{"succeeded", rep.succeeded}, {"failed", rep.failed}}},
                {"item_failures", rep.item_failures},
                {"warnings", rep.warnings},
                {"fatal_errors", rep.fatal_errors},
                {"client", client_stats_json(*session->client)},
                {"summary", rep.summary}};
  const auto path = settings.out_dir / "manifest.json";
  std::ofstream(path, std::ios::trunc) << manifest.dump(2) << '\n';
  return rep;
}

std::vector<std::string> read_seeds(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> seeds;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    seeds.push_back(std::move(t));
  }
  return seeds;
}

template <class T>
std::vector<T> load_input(const fs::path& path) {
  try {
    return load_corpus<T>(path);
  } catch (const Error& e) {
    throw UsageError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

struct Measured {
  PersonaCard card;
  inventory::Measurement m;
};

Measured describe_and_measure(PersonaCard card, const Session& session, const inventory::InventoryPair& invs) {
  const auto ctx = session.ctx();
  if (!card.trait_sentences) card = persona::describe_traits(std::move(card), ctx, kBothFamilies);
  auto m = inventory::measure(card, invs, ctx, session.admin);
  return {std::move(card), std::move(m)};
}

std::vector<TraitProfile> complete_only(const std::vector<TraitProfile>& profiles, RunReport& rep) {
  std::vector<TraitProfile> out;
  for (const auto& p : profiles) {
    if (p.complete()) {
      out.push_back(p);
    } else {
      rep.warnings.push_back(fmt::format("profile '{}' is partial and left out of the correlation", p.persona_id));
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

RunReport cmd_extract(const Settings& settings, const ExtractArgs& args) {
  const auto source = [&]() -> Source {
    if (args.kind == "esconv") return Source::esconv;
    if (args.kind == "cams") return Source::cams;
    if (args.kind == "dreaddit") return Source::dreaddit;
    throw UsageError(fmt::format("corpus kind must be esconv, cams or dreaddit, got '{}'", args.kind));
  }();
  const json jargs{{"corpus", args.corpus.string()}, {"kind", args.kind}};
  return run_command("extract", settings, {args.corpus}, jargs, [&](Session& session, RunReport& rep) {
    std::vector<persona::SourceText> sources;
    try {
      if (source == Source::esconv) {
        for (const auto& d : persona::load_esconv_dialogues(args.corpus)) sources.push_back(persona::to_source(d));
      } else {
        sources = persona::load_posts(args.corpus, source);
      }
    } catch (const json::exception& e) {
      throw UsageError(fmt::format("{}: {}", args.corpus.string(), e.what()));
    } catch (const CorpusError& e) {
      throw UsageError(fmt::format("{}: {}", args.corpus.string(), e.what()));
    }

    struct Outcome {
      PersonaCard card;
      persona::FilterVerdict verdict;
    };
    const auto ctx = session.ctx();
    auto results = attempt_all(
        session, rep, sources.size(),
        [&](std::size_t i) {
          auto card = persona::extract_card(sources[i], ctx);
          auto verdict = persona::filter_card(card, ctx);
          return Outcome{std::move(card), std::move(verdict)};
        },
        [&](std::size_t i) { return sources[i].id; });

    std::vector<PersonaCard> kept;
    std::vector<json> verdicts;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i]) {
        verdicts.push_back({{"id", sources[i].id}, {"keep", false}, {"reason", "extraction failed"}});
        continue;
      }
      verdicts.push_back({{"id", sources[i].id}, {"keep", results[i]->verdict.keep}, {"reason", results[i]->verdict.reason}});
      if (results[i]->verdict.keep) kept.push_back(results[i]->card);
    }
    const auto stats = persona::corpus_stats(kept);
    write_corpus(rep, settings.out_dir / "personas.jsonl", kept);
    write_jsonl(rep, settings.out_dir / "filter_verdicts.jsonl", verdicts);
    const auto md = reports::corpus_stats_md(stats, args.kind);
    write_text(rep, settings.out_dir / "corpus_stats.md", md);
    write_text(rep, settings.out_dir / "corpus_stats.csv", reports::corpus_stats_csv(stats));
    rep.console = md;
    rep.summary = {{"sources", sources.size()},
                   {"extracted", rep.succeeded},
                   {"kept", kept.size()},
                   {"filtered_out", rep.succeeded - kept.size()}};
    if (!sources.empty() && rep.succeeded == 0) {
      rep.fatal_errors.push_back("extraction failed for every input record");
    }
  });
}

RunReport cmd_measure(const Settings& settings, const MeasureArgs& args) {
  if (args.personas.has_value() == args.profiles.has_value()) {
    throw UsageError("measure needs exactly one of --personas or --profiles");
  }
  const fs::path input = args.personas ? *args.personas : *args.profiles;
  const json jargs{{args.personas ? "personas" : "profiles", input.string()}};
  const auto invs = args.personas ? std::optional(load_inventories(settings)) : std::nullopt;
  std::vector<fs::path> inputs{input};
  return run_command("measure", settings, inputs, jargs, [&](Session& session, RunReport& rep) {
    std::vector<TraitProfile> profiles;
    if (args.personas) {
      const auto cards = load_input<PersonaCard>(input);
      auto results = attempt_all(
          session, rep, cards.size(), [&](std::size_t i) { return describe_and_measure(cards[i], session, *invs); },
          [&](std::size_t i) { return cards[i].id; });
      std::vector<PersonaCard> described;
      std::vector<inventory::AdministrationRecord> admins;
      for (auto& r : results) {
        if (!r) continue;
        described.push_back(r->card);
        profiles.push_back(r->m.profile);
        admins.push_back(r->m.hexaco_record);
        admins.push_back(r->m.csi_record);
      }
      write_corpus(rep, settings.out_dir / "personas_with_traits.jsonl", described);
      write_corpus(rep, settings.out_dir / "profiles.jsonl", profiles);
      write_corpus(rep, settings.out_dir / "administrations.jsonl", admins);
    } else {
      profiles = load_input<TraitProfile>(input);
      rep.succeeded = profiles.size();
    }

    const auto complete = complete_only(profiles, rep);
    rep.summary["profiles"] = profiles.size();
    rep.summary["complete_profiles"] = complete.size();
    if (complete.size() < 3) {
      throw Error(fmt::format("correlation needs at least 3 complete profiles, have {}", complete.size()));
    }
    const auto corr = stats::correlation_matrix(complete);
    write_text(rep, settings.out_dir / "correlation_r.csv", reports::correlation_r_csv(corr));
    write_text(rep, settings.out_dir / "correlation_p.csv", reports::correlation_p_csv(corr));
    const auto md = reports::alignment_md(corr, "HEXACO / CSI correlations");
    write_text(rep, settings.out_dir / "alignment.md", md);
    rep.console = md;
    rep.summary["aligned"] = corr.aligned_count();
    if (!corr.undefined_dimensions.empty()) {
      std::string names;
      for (auto d : corr.undefined_dimensions) names += (names.empty() ? "" : ", ") + d.qualified_name();
      rep.fatal_errors.push_back(fmt::format(
          "constant dimension(s) across all profiles, correlation undefined: {}", names));
    }
  });
}

RunReport cmd_consistency(const Settings& settings, const ConsistencyArgs&) {
  require_readable(settings.seed_file, "seed file");
  const auto invs = load_inventories(settings);
  const json jargs{{"seed_file", settings.seed_file.string()}};
  return run_command("consistency", settings, {settings.seed_file}, jargs, [&](Session& session, RunReport& rep) {
    const auto seeds = read_seeds(settings.seed_file);
    const auto ctx = session.ctx();
    auto results = attempt_all(
        session, rep, seeds.size(),
        [&](std::size_t i) {
          auto card = persona::expand_card(fmt::format("seed-{:04d}", i), seeds[i], ctx, kBothFamilies);
          auto m = inventory::measure(card, invs, ctx, session.admin);
          auto rt = synthesis::roundtrip_traits(card, m.profile, ctx, invs, rep.run_id, settings.turn_budget,
                                                session.admin);
          return std::pair{std::move(card), std::move(rt)};
        },
        [&](std::size_t i) { return fmt::format("seed-{:04d}", i); });

    std::vector<PersonaCard> expanded;
    std::vector<PersonaCard> extracted_cards;
    std::vector<TraitProfile> original;
    std::vector<TraitProfile> extracted;
    std::vector<Dialogue> dialogues;
    for (auto& r : results) {
      if (!r) continue;
      expanded.push_back(r->first);
      original.push_back(r->second.original);
      extracted.push_back(r->second.extracted);
      extracted_cards.push_back(r->second.extracted_card);
      dialogues.push_back(r->second.dialogue);
      for (auto& w : r->second.warnings) rep.warnings.push_back(w);
    }
    write_corpus(rep, settings.out_dir / "personas_expanded.jsonl", expanded);
    write_corpus(rep, settings.out_dir / "profiles_original.jsonl", original);
    write_corpus(rep, settings.out_dir / "dialogues.jsonl", dialogues);
    write_corpus(rep, settings.out_dir / "personas_extracted.jsonl", extracted_cards);
    write_corpus(rep, settings.out_dir / "profiles_extracted.jsonl", extracted);
    rep.summary = {{"seeds", seeds.size()}, {"round_trips", original.size()}};
    if (original.empty()) throw Error("no round trip completed; nothing to compare");
    const auto shift = stats::trait_shift(original, extracted);
    const auto md = reports::trait_shift_md(shift);
    write_text(rep, settings.out_dir / "trait_shift.md", md);
    write_text(rep, settings.out_dir / "trait_shift.csv", reports::trait_shift_csv(shift));
    write_text(rep, settings.out_dir / "violin_data.csv", reports::violin_csv(original, extracted));
    rep.console = md;
  });
}

RunReport cmd_ablation(const Settings& settings, const AblationArgs& args) {
  if (args.n < 3) throw UsageError(fmt::format("ablation needs n >= 3 implicit-persona dialogues, got {}", args.n));
  std::vector<fs::path> inputs;
  if (args.profiles) {
    inputs.push_back(*args.profiles);
  } else if (!settings.seed_file.empty()) {
    inputs.push_back(settings.seed_file);
  } else {
    throw UsageError("ablation needs the persona-injected group: --profiles <file> or --seed-file <file>");
  }
  const auto invs = load_inventories(settings);
  json jargs{{"n", args.n}};
  if (args.profiles) jargs["profiles"] = args.profiles->string();
  return run_command("ablation", settings, inputs, jargs, [&](Session& session, RunReport& rep) {
    const auto ctx = session.ctx();
    std::vector<TraitProfile> injected;
    if (args.profiles) {
      injected = load_input<TraitProfile>(*args.profiles);
    } else {
      const auto seeds = read_seeds(settings.seed_file);
      auto results = attempt_all(
          session, rep, seeds.size(),
          [&](std::size_t i) {
            auto card = persona::expand_card(fmt::format("seed-{:04d}", i), seeds[i], ctx, kBothFamilies);
            return inventory::measure(card, invs, ctx, session.admin).profile;
          },
          [&](std::size_t i) { return fmt::format("seed-{:04d}", i); });
      for (auto& r : results)
        if (r) injected.push_back(std::move(*r));
      write_corpus(rep, settings.out_dir / "profiles_with_persona.jsonl", injected);
    }
    std::erase_if(injected, [&](const TraitProfile& p) {
      if (p.complete(Family::hexaco)) return false;
      rep.warnings.push_back(fmt::format("profile '{}' lacks HEXACO scores; skipped", p.persona_id));
      return true;
    });

    auto run = synthesis::implicit_persona_run(args.n, ctx, invs, rep.run_id, settings.turn_budget, session.admin);
    rep.succeeded += run.items.size();
    rep.failed += run.failures.size();
    for (const auto& [i, msg] : run.failures) rep.item_failures.push_back(fmt::format("implicit-{:04d}: {}", i, msg));
    std::vector<TraitProfile> implicit;
    std::vector<Dialogue> dialogues;
    for (const auto& it : run.items) {
      if (it.profile.complete(Family::hexaco)) implicit.push_back(it.profile);
      dialogues.push_back(it.dialogue);
    }
    write_corpus(rep, settings.out_dir / "dialogues_no_persona.jsonl", dialogues);
    write_corpus(rep, settings.out_dir / "profiles_no_persona.jsonl", implicit);

    if (implicit.size() < 2 || injected.size() < 2) {
      throw Error(fmt::format("spread needs at least 2 profiles per group (no persona: {}, with persona: {})",
                              implicit.size(), injected.size()));
    }
    std::vector<stats::Point6> a;
    std::vector<stats::Point6> b;
    std::vector<std::string> ida;
    std::vector<std::string> idb;
    for (const auto& p : implicit) {
      a.push_back(stats::hexaco_point(p));
      ida.push_back(p.persona_id);
    }
    for (const auto& p : injected) {
      b.push_back(stats::hexaco_point(p));
      idb.push_back(p.persona_id);
    }
    // One shared space, fitted on both groups together.
    std::vector<stats::Point6> all = a;
    all.insert(all.end(), b.begin(), b.end());
    const auto model = stats::fit_pca2(all);
    const auto pa = model.project(a);
    const auto pb = model.project(b);
    const double sa = stats::spread(pa);
    const double sb = stats::spread(pb);
    write_text(rep, settings.out_dir / "pca_no_persona.csv", reports::projection_csv(ida, pa));
    write_text(rep, settings.out_dir / "pca_with_persona.csv", reports::projection_csv(idb, pb));
    const auto md = reports::spread_md(sa, sb, pa.size(), pb.size(), model.explained_variance_ratio);
    write_text(rep, settings.out_dir / "spread.md", md);
    rep.console = md;
    rep.summary = {{"no_persona", pa.size()}, {"with_persona", pb.size()},
                   {"spread_no_persona", sa}, {"spread_with_persona", sb}};
  });
}

RunReport cmd_strategies(const Settings& settings, const StrategiesArgs& args) {
  using synthesis::TraitSubset;
  std::pair<TraitSubset, TraitSubset> subsets;
  std::pair<std::string, std::string> names;
  if (args.contrast == "pt") {
    subsets = {TraitSubset::both, TraitSubset::none};
    names = {"with_pt", "without_pt"};
  } else if (args.contrast == "hexaco-csi") {
    subsets = {TraitSubset::hexaco_only, TraitSubset::csi_only};
    names = {"hexaco_only", "csi_only"};
  } else {
    throw UsageError(fmt::format("contrast must be 'pt' or 'hexaco-csi', got '{}'", args.contrast));
  }
  const json jargs{{"histories", args.histories.string()}, {"traits", args.traits.string()},
                   {"contrast", args.contrast}, {"max_histories", args.max_histories ? json(*args.max_histories) : json()}};
  return run_command("strategies", settings, {args.histories, args.traits}, jargs, [&](Session& session, RunReport& rep) {
    std::vector<Dialogue> histories;
    try {
      histories = persona::load_esconv_dialogues(args.histories);
    } catch (const Error& e) {
      throw UsageError(fmt::format("{}: {}", args.histories.string(), e.what()));
    } catch (const json::exception& e) {
      throw UsageError(fmt::format("{}: {}", args.histories.string(), e.what()));
    }
    std::map<std::string, TraitProfile> traits;
    for (auto& p : load_input<TraitProfile>(args.traits)) traits.emplace(p.persona_id, std::move(p));

    // Only histories with a trait profile take part, so both conditions
    // always cover the same histories.
    std::vector<std::pair<Dialogue, TraitProfile>> paired;
    for (auto& h : histories) {
      const auto key = h.persona_id.value_or(h.id);
      auto it = traits.find(key);
      if (it == traits.end()) {
        rep.warnings.push_back(fmt::format("history '{}' has no trait profile; skipped", h.id));
        continue;
      }
      if (args.max_histories && paired.size() >= *args.max_histories) break;
      h.persona_id = key;
      paired.emplace_back(std::move(h), it->second);
    }

    const auto ctx = session.ctx();
    auto results = attempt_all(
        session, rep, paired.size(),
        [&](std::size_t i) {
          synthesis::SynthesisJob job;
          job.mode = synthesis::SynthesisMode::continuation;
          job.history = paired[i].first;
          job.traits = paired[i].second;
          job.turn_budget = settings.turn_budget;
          job.trait_subset = subsets.first;
          auto a = synthesis::continue_dialogue(job, ctx);
          job.trait_subset = subsets.second;
          auto b = synthesis::continue_dialogue(job, ctx);
          return std::pair{std::move(a), std::move(b)};
        },
        [&](std::size_t i) { return paired[i].first.id; });

    std::vector<Dialogue> da;
    std::vector<Dialogue> db;
    std::vector<json> exports;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i]) continue;
      auto& [a, b] = *results[i];
      for (auto& w : a.warnings) rep.warnings.push_back(w);
      for (auto& w : b.warnings) rep.warnings.push_back(w);
      exports.push_back({{"history_id", paired[i].first.id},
                         {"persona_id", paired[i].second.persona_id},
                         {"conditions",
                          {{names.first, RecordTraits<Dialogue>::to_json(a.dialogue)},
                           {names.second, RecordTraits<Dialogue>::to_json(b.dialogue)}}}});
      da.push_back(std::move(a.dialogue));
      db.push_back(std::move(b.dialogue));
    }
    write_corpus(rep, settings.out_dir / fmt::format("dialogues_{}.jsonl", names.first), da);
    write_corpus(rep, settings.out_dir / fmt::format("dialogues_{}.jsonl", names.second), db);
    write_jsonl(rep, settings.out_dir / "paired_export.jsonl", exports);

    const auto dist_a = stats::strategy_distribution(da);
    const auto dist_b = stats::strategy_distribution(db);
    std::optional<stats::ChiSquareResult> test;
    std::string note;
    try {
      test = stats::distribution_compare(dist_a, dist_b);
    } catch (const UndefinedStatistic& e) {
      note = e.what();
      rep.warnings.push_back(note);
    }
    write_text(rep, settings.out_dir / "strategy_distribution.csv",
               reports::strategy_distribution_csv(dist_a, names.first, dist_b, names.second));
    const auto md = reports::strategy_comparison_md(dist_a, names.first, dist_b, names.second, test, note);
    write_text(rep, settings.out_dir / "strategy_comparison.md", md);
    rep.console = md;
    rep.summary = {{"histories", paired.size()}, {"pairs", da.size()}};
    if (test) rep.summary["chi2"] = test->chi2;
    if (!paired.empty() && da.empty()) throw Error("every continuation pair failed");
    if (paired.empty()) throw Error("no history has a matching trait profile");
  });
}

}  // namespace pesc::app
