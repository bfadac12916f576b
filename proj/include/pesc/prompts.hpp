#pragma once

// Prompt templates. A template file has an optional "[system]" section and
// a "[user]" section; placeholders are written {name} and "{{" / "}}" stand
// for literal braces.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace pesc {

struct PromptTemplate {
  std::string name;
  std::string system;
  std::string user;

  std::string sha256() const;
};

PromptTemplate parse_prompt_template(std::string name, std::string_view text);

// Substitutes every placeholder; a placeholder with no value is an error.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values);

class PromptSet {
 public:
  // Templates compiled into the library from prompts/*.prompt.
  static PromptSet builtin();
  // Builtins overridden by any *.prompt files found in `directory`.
  static PromptSet with_overrides(const std::filesystem::path& directory);

  const PromptTemplate& get(std::string_view name) const;
  bool contains(std::string_view name) const { return templates_.count(std::string(name)) != 0; }
  // name -> sha256 of the template text, for run manifests.
  std::map<std::string, std::string> hashes() const;

  void set(PromptTemplate t) { templates_[t.name] = std::move(t); }

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

namespace prompt_names {
inline constexpr std::string_view extract_persona = "extract_persona";
inline constexpr std::string_view filter_persona = "filter_persona";
inline constexpr std::string_view describe_traits = "describe_traits";
inline constexpr std::string_view expand_persona = "expand_persona";
inline constexpr std::string_view answer_item = "answer_item";
inline constexpr std::string_view answer_inventory = "answer_inventory";
inline constexpr std::string_view generate_dialogue = "generate_dialogue";
inline constexpr std::string_view generate_dialogue_no_persona = "generate_dialogue_no_persona";
inline constexpr std::string_view continue_dialogue = "continue_dialogue";
inline constexpr std::string_view reask = "reask";
}  // namespace prompt_names

}  // namespace pesc
