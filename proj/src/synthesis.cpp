#include "pesc/synthesis.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "pesc/error.hpp"
#include "pesc/parallel.hpp"
#include "pesc/persona.hpp"

namespace pesc::synthesis {

namespace {

constexpr std::array<Family, 2> kBothFamilies{Family::hexaco, Family::csi};

bool istarts_with(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

std::string strip_decoration(std::string_view line) {
  auto s = trim(line);
  while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '>')) s = trim(s.substr(1));
  // "**Seeker:**" style bold markers.
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.compare(i, 2, "**") == 0) {
      ++i;
      continue;
    }
    out += s[i];
  }
  return out;
}

struct RoleLine {
  Role role;
  std::optional<std::string> label;
  std::string text;
};

std::optional<RoleLine> parse_role_line(std::string_view raw) {
  const auto line = strip_decoration(raw);
  std::string_view s = line;
  RoleLine out{Role::seeker, std::nullopt, {}};
  if (istarts_with(s, "seeker")) {
    s.remove_prefix(6);
  } else if (istarts_with(s, "supporter")) {
    out.role = Role::supporter;
    s.remove_prefix(9);
  } else {
    return std::nullopt;
  }
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  if (!s.empty() && (s.front() == '[' || s.front() == '(')) {
    const char close = s.front() == '[' ? ']' : ')';
    const auto end = s.find(close);
    if (end == std::string_view::npos) return std::nullopt;
    out.label = trim(s.substr(1, end - 1));
    s.remove_prefix(end + 1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  }
  if (s.empty() || s.front() != ':') return std::nullopt;
  s.remove_prefix(1);
  auto text = trim(s);
  // "Supporter: [Question] text"
  if (out.role == Role::supporter && !out.label && !text.empty() && text.front() == '[') {
    if (const auto end = text.find(']'); end != std::string::npos) {
      out.label = trim(std::string_view(text).substr(1, end - 1));
      text = trim(std::string_view(text).substr(end + 1));
    }
  }
  out.text = std::move(text);
  return out;
}

std::string describe_unlabeled(const ParsedTurns& turns) {
  std::string what;
  for (const auto& [idx, label] : turns.unlabeled) {
    if (!what.empty()) what += "; ";
    what += label.empty() ? fmt::format("supporter line {} has no strategy label", idx + 1)
                          : fmt::format("supporter line {} has unknown strategy '{}'", idx + 1, label);
  }
  return what;
}

// Shared by every generator: one re-ask on missing turns or bad labels,
// then unresolved labels fall back to Others with a warning.
SynthesisResult run_generation(const PipelineContext& ctx, std::string_view prompt,
                               const PromptValues& values, std::size_t turn_budget,
                               std::string_view what) {
  auto turns = parse_dialogue_reply(ask(ctx, prompt, values), turn_budget);
  if (turns.utterances.empty() || !turns.unlabeled.empty()) {
    const auto problem = turns.utterances.empty()
                             ? std::string("no 'Seeker:' or 'Supporter [strategy]:' lines were found")
                             : describe_unlabeled(turns) + "; valid strategies are listed above";
    auto retry = parse_dialogue_reply(reask(ctx, prompt, values, problem), turn_budget);
    if (!retry.utterances.empty() &&
        (turns.utterances.empty() || retry.unlabeled.size() <= turns.unlabeled.size())) {
      turns = std::move(retry);
    }
  }
  if (turns.utterances.empty()) throw StageError(fmt::format("{}: reply contained no dialogue turns", what));

  SynthesisResult res;
  for (const auto& [idx, label] : turns.unlabeled) {
    res.warnings.push_back(fmt::format("{}: turn {} labeled Others ({})", what, idx + 1,
                                       label.empty() ? "no label" : "unknown label '" + label + "'"));
  }
  if (turns.dropped_over_budget > 0) {
    res.warnings.push_back(fmt::format("{}: {} lines beyond the turn budget of {} dropped", what,
                                       turns.dropped_over_budget, turn_budget));
  }
  res.dialogue.utterances = std::move(turns.utterances);
  return res;
}

PromptValues base_values(std::size_t turn_budget) {
  return {{"strategy_list", strategy_list()}, {"turn_budget", std::to_string(turn_budget)}};
}

void require_budget(std::size_t turn_budget) {
  if (turn_budget < 2) throw ValidationError("turn budget must be at least 2 utterances");
}

}  // namespace

std::string_view to_string(TraitSubset s) {
  switch (s) {
    case TraitSubset::none: return "none";
    case TraitSubset::hexaco_only: return "hexaco_only";
    case TraitSubset::csi_only: return "csi_only";
    case TraitSubset::both: return "both";
  }
  return "none";
}

std::optional<TraitSubset> parse_trait_subset(std::string_view text) {
  const auto n = normalize_label(text);
  if (n == "none") return TraitSubset::none;
  if (n == "hexacoonly" || n == "hexaco") return TraitSubset::hexaco_only;
  if (n == "csionly" || n == "csi") return TraitSubset::csi_only;
  if (n == "both") return TraitSubset::both;
  return std::nullopt;
}

void SynthesisJob::validate() const {
  require_budget(turn_budget);
  if (mode == SynthesisMode::continuation) {
    if (!history || history->utterances.empty()) {
      throw ValidationError("continuation job needs a non-empty history");
    }
  } else if (!persona) {
    throw ValidationError("full_from_persona job needs a persona card");
  }
  if (trait_subset != TraitSubset::none) {
    if (!traits) throw ValidationError("trait subset set but the job carries no trait profile");
    const bool need_h = trait_subset != TraitSubset::csi_only;
    const bool need_c = trait_subset != TraitSubset::hexaco_only;
    if ((need_h && !traits->complete(Family::hexaco)) || (need_c && !traits->complete(Family::csi))) {
      throw ValidationError(fmt::format("trait profile '{}' lacks scores for subset {}", traits->persona_id,
                                        to_string(trait_subset)));
    }
  }
}

ParsedTurns parse_dialogue_reply(std::string_view reply, std::size_t turn_budget) {
  ParsedTurns out;
  std::size_t pos = 0;
  bool last_kept = false;
  while (pos <= reply.size()) {
    auto end = reply.find('\n', pos);
    if (end == std::string_view::npos) end = reply.size();
    const auto line = reply.substr(pos, end - pos);
    pos = end + 1;
    if (trim(line).empty()) continue;
    auto parsed = parse_role_line(line);
    if (!parsed) {
      // Wrapped text continues the previous turn.
      if (last_kept) out.utterances.back().text += " " + trim(line);
      continue;
    }
    if (out.utterances.size() >= turn_budget) {
      ++out.dropped_over_budget;
      last_kept = false;
      continue;
    }
    Utterance u;
    u.role = parsed->role;
    u.text = std::move(parsed->text);
    if (u.role == Role::supporter) {
      std::optional<Strategy> s;
      if (parsed->label) s = parse_strategy(*parsed->label);
      if (!s) {
        out.unlabeled.emplace_back(out.utterances.size(), parsed->label.value_or(""));
        s = Strategy::Others;
      }
      u.strategy = s;
    }
    out.utterances.push_back(std::move(u));
    last_kept = true;
  }
  // A turn whose text was only a label is useless.
  for (std::size_t i = out.utterances.size(); i-- > 0;) {
    if (!out.utterances[i].text.empty()) continue;
    out.utterances.erase(out.utterances.begin() + static_cast<std::ptrdiff_t>(i));
    std::erase_if(out.unlabeled, [&](const auto& e) { return e.first == i; });
    for (auto& e : out.unlabeled)
      if (e.first > i) --e.first;
  }
  return out;
}

SynthesisResult generate_dialogue(const PersonaCard& card, const PipelineContext& ctx, std::size_t turn_budget) {
  require_budget(turn_budget);
  auto values = base_values(turn_budget);
  values["persona"] = format_card(card);
  auto res = run_generation(ctx, prompt_names::generate_dialogue, values, turn_budget, card.id);
  res.dialogue.id = card.id + "-dialogue";
  res.dialogue.condition = Condition::with_persona_traits;
  res.dialogue.persona_id = card.id;
  validate(res.dialogue);
  return res;
}

SynthesisResult generate_dialogue_without_persona(std::size_t index, const PipelineContext& ctx,
                                                  std::size_t turn_budget) {
  require_budget(turn_budget);
  auto values = base_values(turn_budget);
  values["scenario_index"] = std::to_string(index + 1);
  const auto id = fmt::format("implicit-{:04d}", index);
  auto res = run_generation(ctx, prompt_names::generate_dialogue_no_persona, values, turn_budget, id);
  res.dialogue.id = id;
  res.dialogue.condition = Condition::without_persona_traits;
  validate(res.dialogue);
  return res;
}

std::string format_trait_block(const TraitProfile& traits, TraitSubset subset) {
  if (subset == TraitSubset::none) return "";
  std::string out = fmt::format("\nSeeker trait scores (scale {}-{}):\n", traits.provenance.scale.min,
                                traits.provenance.scale.max);
  auto line = [&](Family f) {
    out += family_name(f);
    out += ": ";
    bool first = true;
    for (auto d : dimensions_of(f)) {
      const auto s = traits.score(d);
      if (!s) throw ValidationError(fmt::format("profile '{}' has no score for {}", traits.persona_id, d.qualified_name()));
      out += fmt::format("{}{}={:.2f}", first ? "" : ", ", d.name(), *s);
      first = false;
    }
    out += '\n';
  };
  if (subset != TraitSubset::csi_only) line(Family::hexaco);
  if (subset != TraitSubset::hexaco_only) line(Family::csi);
  return out;
}

namespace {

PromptValues continuation_values(const SynthesisJob& job) {
  auto values = base_values(job.turn_budget);
  values["history"] = persona::render_transcript(*job.history);
  values["trait_block"] = job.trait_subset == TraitSubset::none ? "" : format_trait_block(*job.traits, job.trait_subset);
  return values;
}

std::string_view continuation_suffix(TraitSubset s) {
  switch (s) {
    case TraitSubset::none: return "-cont-nopt";
    case TraitSubset::hexaco_only: return "-cont-hexaco";
    case TraitSubset::csi_only: return "-cont-csi";
    case TraitSubset::both: return "-cont-pt";
  }
  return "-cont";
}

}  // namespace

std::string continuation_prompt(const SynthesisJob& job, const PromptSet& prompts) {
  job.validate();
  if (job.mode != SynthesisMode::continuation) throw ValidationError("not a continuation job");
  return render_user_prompt(prompts, prompt_names::continue_dialogue, continuation_values(job));
}

SynthesisResult continue_dialogue(const SynthesisJob& job, const PipelineContext& ctx) {
  job.validate();
  if (job.mode != SynthesisMode::continuation) throw ValidationError("not a continuation job");
  const auto& history = *job.history;
  const auto id = history.id + std::string(continuation_suffix(job.trait_subset));
  auto res = run_generation(ctx, prompt_names::continue_dialogue, continuation_values(job), job.turn_budget, id);
  res.dialogue.id = id;
  res.dialogue.condition =
      job.trait_subset == TraitSubset::none ? Condition::without_persona_traits : Condition::with_persona_traits;
  res.dialogue.persona_id = history.persona_id;
  if (!res.dialogue.persona_id && job.traits) res.dialogue.persona_id = job.traits->persona_id;
  validate(res.dialogue);
  return res;
}

namespace {

struct Remeasured {
  PersonaCard card;
  TraitProfile profile;
};

Remeasured remeasure(const Dialogue& dialogue, std::string card_id, const PipelineContext& ctx,
                     const inventory::InventoryPair& inventories, const std::string& run_id,
                     const inventory::AdministerOptions& options) {
  auto source = persona::to_source(dialogue, Source::synthetic);
  source.id = std::move(card_id);
  auto card = persona::extract_card(source, ctx);
  card = persona::describe_traits(std::move(card), ctx, kBothFamilies);
  auto m = inventory::measure(card, inventories, ctx, options);
  m.profile.provenance.run_id = run_id;
  return {std::move(card), std::move(m.profile)};
}

}  // namespace

RoundTrip roundtrip_traits(const PersonaCard& card, const TraitProfile& original, const PipelineContext& ctx,
                           const inventory::InventoryPair& inventories, const std::string& run_id,
                           std::size_t turn_budget, const inventory::AdministerOptions& options) {
  if (original.persona_id != card.id) {
    throw ValidationError(
        fmt::format("round trip: profile '{}' does not belong to card '{}'", original.persona_id, card.id));
  }
  RoundTrip rt;
  auto gen = generate_dialogue(card, ctx, turn_budget);
  rt.dialogue = std::move(gen.dialogue);
  rt.warnings = std::move(gen.warnings);
  auto re = remeasure(rt.dialogue, card.id + "-extracted", ctx, inventories, run_id, options);
  rt.extracted_card = std::move(re.card);
  rt.extracted = std::move(re.profile);
  rt.original = original;
  rt.original.provenance.run_id = run_id;
  return rt;
}

ImplicitItem implicit_persona_item(std::size_t index, const PipelineContext& ctx,
                                   const inventory::InventoryPair& inventories, const std::string& run_id,
                                   std::size_t turn_budget, const inventory::AdministerOptions& options) {
  auto gen = generate_dialogue_without_persona(index, ctx, turn_budget);
  auto re = remeasure(gen.dialogue, gen.dialogue.id + "-persona", ctx, inventories, run_id, options);
  re.card.source = Source::synthetic;
  gen.dialogue.persona_id = re.card.id;
  return {std::move(gen.dialogue), std::move(re.card), std::move(re.profile)};
}

std::vector<TraitProfile> ImplicitRun::profiles() const {
  std::vector<TraitProfile> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.profile);
  return out;
}

ImplicitRun implicit_persona_run(std::size_t n, const PipelineContext& ctx,
                                 const inventory::InventoryPair& inventories, const std::string& run_id,
                                 std::size_t turn_budget, const inventory::AdministerOptions& options) {
  if (n < 3) throw ValidationError(fmt::format("implicit persona run needs n >= 3, got {}", n));
  using Outcome = std::pair<std::optional<ImplicitItem>, std::string>;
  const auto outcomes = parallel_map(n, ctx.client.config().max_in_flight, [&](std::size_t i) -> Outcome {
    try {
      return {implicit_persona_item(i, ctx, inventories, run_id, turn_budget, options), {}};
    } catch (const StageError& e) {
      return {std::nullopt, e.what()};
    } catch (const llm::LlmError& e) {
      return {std::nullopt, e.what()};
    }
  });
  ImplicitRun run;
  for (std::size_t i = 0; i < n; ++i) {
    if (outcomes[i].first) {
      run.items.push_back(*outcomes[i].first);
    } else {
      run.failures.emplace_back(i, outcomes[i].second);
    }
  }
  return run;
}

}  // namespace pesc::synthesis
