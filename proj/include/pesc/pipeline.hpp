#pragma once

// Plumbing shared by the LLM-driven stages: the backend/template context,
// template rendering plus the single re-ask, and card formatting.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "pesc/core.hpp"
#include "pesc/llm.hpp"
#include "pesc/prompts.hpp"

namespace pesc {

struct PipelineContext {
  llm::Client& client;
  const PromptSet& prompts;
};

using PromptValues = std::map<std::string, std::string>;

// Renders template `name` with `values` and sends it.
std::string ask(const PipelineContext& ctx, std::string_view name, const PromptValues& values);

// Sends the same prompt again with the re-ask note appended, explaining `problem`.
std::string reask(const PipelineContext& ctx, std::string_view name, const PromptValues& values,
                  std::string_view problem);

// Renders a template without sending it.
std::string render_user_prompt(const PromptSet& prompts, std::string_view name,
                               const PromptValues& values);

// "Age: 34\nGender: ...\n..." block used inside prompts.
std::string format_card(const PersonaCard& card);

// One qualified dimension name per line.
std::string dimension_list(std::span<const Family> families);

// One "- <label>: <definition>" line per strategy.
std::string strategy_list();

// Splits a "key: value" reply. Keys are normalized with normalize_label and
// kept only when `is_key` accepts them; any other line continues the
// previous value. The first occurrence of a key wins.
std::map<std::string, std::string> parse_key_values(
    std::string_view reply, const std::function<bool(std::string_view)>& is_key);

// ISO-8601 UTC time used in provenance fields. Honors SOURCE_DATE_EPOCH so
// reruns can produce byte-identical record files.
std::string run_timestamp();

// True for "unknown", "n/a", "none", "not mentioned", ... and empty text.
bool is_placeholder_value(std::string_view value);

}  // namespace pesc
