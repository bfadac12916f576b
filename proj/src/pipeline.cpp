#include "pesc/pipeline.hpp"

#include <array>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <sstream>

namespace pesc {

std::string render_user_prompt(const PromptSet& prompts, std::string_view name,
                               const PromptValues& values) {
  return render(prompts.get(name).user, values);
}

std::string ask(const PipelineContext& ctx, std::string_view name, const PromptValues& values) {
  const auto& t = ctx.prompts.get(name);
  return ctx.client.complete(render(t.system, values), render(t.user, values)).text;
}

std::string reask(const PipelineContext& ctx, std::string_view name, const PromptValues& values,
                  std::string_view problem) {
  const auto& t = ctx.prompts.get(name);
  const auto note = render(ctx.prompts.get(prompt_names::reask).user,
                           {{"problem", std::string(problem)}});
  return ctx.client.complete(render(t.system, values), render(t.user, values) + "\n\n" + note).text;
}

std::string format_card(const PersonaCard& card) {
  std::ostringstream out;
  if (card.age) out << "Age: " << *card.age << '\n';
  if (card.gender) out << "Gender: " << *card.gender << '\n';
  if (card.occupation) out << "Occupation: " << *card.occupation << '\n';
  out << "Description: " << card.description << '\n';
  if (!card.problem.empty()) out << "Problem: " << card.problem << '\n';
  if (card.trait_sentences && !card.trait_sentences->empty()) {
    out << "Traits:\n";
    for (const auto& [dim, sentence] : *card.trait_sentences) {
      out << "- " << dim.qualified_name() << ": " << sentence << '\n';
    }
  }
  return trim_right(out.str());
}

std::string dimension_list(std::span<const Family> families) {
  std::string out;
  for (Family f : families) {
    for (auto d : dimensions_of(f)) {
      if (!out.empty()) out += '\n';
      out += d.qualified_name();
    }
  }
  return out;
}

std::string strategy_list() {
  std::string out;
  for (Strategy s : all_strategies()) {
    if (!out.empty()) out += '\n';
    out += "- ";
    out += strategy_label(s);
    out += ": ";
    out += strategy_definition(s);
  }
  return out;
}

std::string run_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool is_placeholder_value(std::string_view value) {
  static constexpr std::array<std::string_view, 10> kPlaceholders = {
      "", "unknown", "na", "none", "notmentioned", "notstated", "unspecified", "notspecified",
      "notprovided", "null"};
  const auto n = normalize_label(value);
  for (auto p : kPlaceholders) {
    if (n == p) return true;
  }
  return false;
}

std::map<std::string, std::string> parse_key_values(
    std::string_view reply, const std::function<bool(std::string_view)>& is_key) {
  std::map<std::string, std::string> out;
  std::string* current = nullptr;
  std::istringstream in{std::string(reply)};
  std::string raw;
  while (std::getline(in, raw)) {
    auto line = trim(raw);
    // Tolerate list bullets and markdown emphasis around keys.
    while (!line.empty() && (line.front() == '-' || line.front() == '*' || line.front() == '#')) {
      line = trim(std::string_view(line).substr(1));
    }
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon != std::string::npos) {
      const auto key = normalize_label(std::string_view(line).substr(0, colon));
      if (!key.empty() && is_key(key)) {
        auto value = trim(std::string_view(line).substr(colon + 1));
        while (!value.empty() && value.front() == '*') value = trim(std::string_view(value).substr(1));
        auto [it, inserted] = out.try_emplace(key, value);
        current = inserted ? &it->second : nullptr;
        continue;
      }
    }
    if (current) {
      if (!current->empty()) *current += ' ';
      *current += line;
    }
  }
  return out;
}

}  // namespace pesc
