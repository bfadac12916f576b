#include "pesc/prompts.hpp"

#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "pesc/core.hpp"
#include "pesc/error.hpp"
#include "pesc/llm.hpp"

namespace pesc {

namespace detail {
// Generated from prompts/*.prompt at build time.
std::vector<std::pair<std::string_view, std::string_view>> builtin_prompt_sources();
}  // namespace detail

std::string PromptTemplate::sha256() const {
  return llm::sha256_hex("[system]\n" + system + "\n[user]\n" + user);
}

PromptTemplate parse_prompt_template(std::string name, std::string_view text) {
  PromptTemplate out;
  out.name = std::move(name);
  std::string* section = nullptr;
  std::istringstream in{std::string(text)};
  std::string line;
  bool saw_user = false;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t == "[system]") {
      section = &out.system;
      continue;
    }
    if (t == "[user]") {
      section = &out.user;
      saw_user = true;
      continue;
    }
    if (!section) {
      if (t.empty()) continue;
      section = &out.user;  // no headers: the whole file is the user prompt
      saw_user = true;
    }
    *section += line;
    *section += '\n';
  }
  out.system = trim(out.system);
  // Keep interior layout; drop only surrounding blank lines.
  out.user = trim(out.user);
  if (!saw_user || out.user.empty()) {
    throw ValidationError("prompt template '" + out.name + "' has no [user] section");
  }
  return out;
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const char c = tmpl[i];
    if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
      out += '{';
      ++i;
    } else if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
      out += '}';
      ++i;
    } else if (c == '{') {
      const auto close = tmpl.find('}', i);
      if (close == std::string_view::npos) throw ValidationError("unterminated placeholder in template");
      const std::string key(tmpl.substr(i + 1, close - i - 1));
      auto it = values.find(key);
      if (it == values.end()) throw ValidationError("no value for placeholder {" + key + "}");
      out += it->second;
      i = close;
    } else {
      out += c;
    }
  }
  return out;
}

PromptSet PromptSet::builtin() {
  PromptSet set;
  for (const auto& [name, text] : detail::builtin_prompt_sources()) {
    set.set(parse_prompt_template(std::string(name), text));
  }
  return set;
}

PromptSet PromptSet::with_overrides(const std::filesystem::path& directory) {
  auto set = builtin();
  if (!std::filesystem::is_directory(directory)) {
    throw Error("prompt directory " + directory.string() + " does not exist");
  }
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (entry.path().extension() != ".prompt") continue;
    std::ifstream in(entry.path());
    std::stringstream buf;
    buf << in.rdbuf();
    set.set(parse_prompt_template(entry.path().stem().string(), buf.str()));
  }
  return set;
}

const PromptTemplate& PromptSet::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw Error("no prompt template named '" + std::string(name) + "'");
  return it->second;
}

std::map<std::string, std::string> PromptSet::hashes() const {
  std::map<std::string, std::string> out;
  for (const auto& [name, t] : templates_) out[name] = t.sha256();
  return out;
}

}  // namespace pesc
