#pragma once

// Dialogue synthesis: persona-conditioned dialogues, continuations of an
// existing history with or without trait scores, and the persona round trip.

#include <optional>
#include <string>
#include <vector>

#include "pesc/core.hpp"
#include "pesc/inventory.hpp"
#include "pesc/pipeline.hpp"

namespace pesc::synthesis {

inline constexpr std::size_t kDefaultTurnBudget = 16;

enum class TraitSubset : std::uint8_t { none, hexaco_only, csi_only, both };
enum class SynthesisMode : std::uint8_t { full_from_persona, continuation };

std::string_view to_string(TraitSubset s);
std::optional<TraitSubset> parse_trait_subset(std::string_view text);

struct SynthesisJob {
  SynthesisMode mode = SynthesisMode::continuation;
  std::optional<PersonaCard> persona;
  std::optional<TraitProfile> traits;
  TraitSubset trait_subset = TraitSubset::none;
  std::optional<Dialogue> history;
  std::size_t turn_budget = kDefaultTurnBudget;

  // Throws ValidationError when the job is inconsistent.
  void validate() const;
};

struct SynthesisResult {
  Dialogue dialogue;
  std::vector<std::string> warnings;
};

// Lines "Seeker: text" and "Supporter [Strategy]: text". Other non-blank
// lines continue the previous utterance. At most `turn_budget` utterances
// are kept.
struct ParsedTurns {
  std::vector<Utterance> utterances;
  // Supporter turns whose label was missing or unknown, with the raw label.
  std::vector<std::pair<std::size_t, std::string>> unlabeled;
  std::size_t dropped_over_budget = 0;
};
ParsedTurns parse_dialogue_reply(std::string_view reply, std::size_t turn_budget);

SynthesisResult generate_dialogue(const PersonaCard& card, const PipelineContext& ctx,
                                  std::size_t turn_budget = kDefaultTurnBudget);

// No persona in the prompt; `index` keeps the prompts of one run distinct.
SynthesisResult generate_dialogue_without_persona(std::size_t index, const PipelineContext& ctx,
                                                  std::size_t turn_budget = kDefaultTurnBudget);

// "\nSeeker trait scores (scale 1-5):\nHEXACO: HonestyHumility=3.50, ...\n"
// Empty for TraitSubset::none.
std::string format_trait_block(const TraitProfile& traits, TraitSubset subset);

// The rendered user prompt of a continuation job.
std::string continuation_prompt(const SynthesisJob& job, const PromptSet& prompts);

SynthesisResult continue_dialogue(const SynthesisJob& job, const PipelineContext& ctx);

struct RoundTrip {
  TraitProfile original;
  TraitProfile extracted;
  Dialogue dialogue;
  PersonaCard extracted_card;
  std::vector<std::string> warnings;
};

// generate_dialogue -> extract_card -> describe_traits -> measure. Both
// profiles get `run_id`. Throws StageError (or a subclass) when any stage fails.
RoundTrip roundtrip_traits(const PersonaCard& card, const TraitProfile& original,
                           const PipelineContext& ctx, const inventory::InventoryPair& inventories,
                           const std::string& run_id, std::size_t turn_budget = kDefaultTurnBudget,
                           const inventory::AdministerOptions& options = {});

struct ImplicitItem {
  Dialogue dialogue;
  PersonaCard card;
  TraitProfile profile;
};

// One implicit-persona item: dialogue without persona, then extraction and
// measurement as in the round trip.
ImplicitItem implicit_persona_item(std::size_t index, const PipelineContext& ctx,
                                   const inventory::InventoryPair& inventories,
                                   const std::string& run_id,
                                   std::size_t turn_budget = kDefaultTurnBudget,
                                   const inventory::AdministerOptions& options = {});

struct ImplicitRun {
  std::vector<ImplicitItem> items;
  std::vector<std::pair<std::size_t, std::string>> failures;  // index, message

  std::vector<TraitProfile> profiles() const;
};

// Requires n >= 3. Failed items are recorded and skipped.
ImplicitRun implicit_persona_run(std::size_t n, const PipelineContext& ctx,
                                 const inventory::InventoryPair& inventories,
                                 const std::string& run_id,
                                 std::size_t turn_budget = kDefaultTurnBudget,
                                 const inventory::AdministerOptions& options = {});

}  // namespace pesc::synthesis
