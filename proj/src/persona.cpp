#include "pesc/persona.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pesc/error.hpp"

namespace pesc::persona {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string, std::less<>> kCardKeys = {"age", "gender", "occupation", "description",
                                                      "problem"};

// A JSON array file, or one JSON object per line.
std::vector<json> read_json_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const auto text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  std::vector<json> out;
  if (text[first] == '[') {
    try {
      for (auto& r : json::parse(text)) out.push_back(std::move(r));
    } catch (const json::parse_error& e) {
      throw CorpusError(1, "", std::string("malformed JSON array: ") + e.what());
    }
    return out;
  }
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      out.push_back(json::parse(t));
    } catch (const json::parse_error& e) {
      throw CorpusError(line_no, "", std::string("malformed JSON: ") + e.what());
    }
  }
  return out;
}

std::string string_field(const json& j, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (j.contains(n) && j.at(n).is_string()) return j.at(n).get<std::string>();
  }
  return {};
}

std::optional<Dimension> resolve_dimension(std::string_view key, std::span<const Family> families) {
  if (auto d = Dimension::parse(key)) {
    for (Family f : families) {
      if (d->family() == f) return d;
    }
    return std::nullopt;
  }
  std::optional<Dimension> found;
  for (Family f : families) {
    if (auto d = Dimension::parse(key, f)) {
      if (found) return std::nullopt;  // bare name shared by two families
      found = d;
    }
  }
  return found;
}

std::optional<int> first_integer(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(text[i]))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      if (j - i > 3) return std::nullopt;
      return std::stoi(std::string(text.substr(i, j - i)));
    }
  }
  return std::nullopt;
}

std::optional<std::string> present(const std::map<std::string, std::string>& fields,
                                   const std::string& key) {
  auto it = fields.find(key);
  if (it == fields.end() || is_placeholder_value(it->second)) return std::nullopt;
  return it->second;
}

std::vector<Dimension> missing_dimensions(const TraitSentences& sentences,
                                          std::span<const Family> families) {
  std::vector<Dimension> out;
  for (Family f : families) {
    for (auto d : dimensions_of(f)) {
      if (!sentences.count(d)) out.push_back(d);
    }
  }
  return out;
}

std::string join_names(const std::vector<Dimension>& dims) {
  std::string out;
  for (const auto& d : dims) {
    if (!out.empty()) out += ", ";
    out += d.qualified_name();
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Dialogue> load_esconv_dialogues(const fs::path& path) {
  const auto records = read_json_records(path);
  std::vector<Dialogue> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.is_object() || !r.contains("dialog") || !r.at("dialog").is_array()) {
      throw CorpusError(i + 1, "dialog", "ESConv record needs a 'dialog' array");
    }
    Dialogue d;
    d.id = string_field(r, {"id"});
    if (d.id.empty()) d.id = fmt::format("esconv-{:04d}", i);
    d.condition = Condition::original;
    for (const auto& turn : r.at("dialog")) {
      const auto speaker = normalize_label(string_field(turn, {"speaker", "role"}));
      Utterance u;
      if (speaker == "seeker" || speaker == "usr" || speaker == "user") {
        u.role = Role::seeker;
      } else if (speaker == "supporter" || speaker == "sys" || speaker == "system") {
        u.role = Role::supporter;
      } else {
        throw CorpusError(i + 1, "dialog.speaker", "unknown speaker '" + speaker + "'");
      }
      u.text = trim(string_field(turn, {"content", "text"}));
      if (u.text.empty()) continue;
      if (u.role == Role::supporter && turn.contains("annotation") && turn.at("annotation").is_object()) {
        u.strategy = parse_strategy(string_field(turn.at("annotation"), {"strategy"}));
      }
      d.utterances.push_back(std::move(u));
    }
    if (d.utterances.empty()) throw CorpusError(i + 1, "dialog", "dialogue has no utterances");
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<SourceText> load_posts(const fs::path& path, Source source) {
  const auto records = read_json_records(path);
  std::vector<SourceText> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.is_object()) throw CorpusError(i + 1, "", "post record is not an object");
    SourceText s;
    s.source = source;
    s.id = string_field(r, {"id", "post_id"});
    if (s.id.empty()) s.id = fmt::format("{}-{:04d}", to_string(source), i);
    const auto title = trim(string_field(r, {"title"}));
    const auto body = trim(string_field(r, {"text", "post", "selftext"}));
    if (body.empty() && title.empty()) throw CorpusError(i + 1, "text", "post has no text");
    s.text = "Post written by the seeker:\n";
    if (!title.empty()) s.text += title + "\n";
    s.text += body;
    out.push_back(std::move(s));
  }
  return out;
}

std::string render_transcript(const Dialogue& dialogue) {
  std::string out;
  for (const auto& u : dialogue.utterances) {
    if (!out.empty()) out += '\n';
    out += u.role == Role::seeker ? "Seeker: " : "Supporter: ";
    out += u.text;
  }
  return out;
}

SourceText to_source(const Dialogue& dialogue, Source source) {
  return {dialogue.id, source, render_transcript(dialogue)};
}

// ---------------------------------------------------------------------------

PersonaCard parse_card_reply(std::string_view reply, std::string id, Source source) {
  const auto fields =
      parse_key_values(reply, [](std::string_view k) { return kCardKeys.count(k) != 0; });
  PersonaCard card;
  card.id = std::move(id);
  card.source = source;
  if (auto age = present(fields, "age")) {
    if (auto n = first_integer(*age); n && *n > 0 && *n <= 120) card.age = n;
  }
  card.gender = present(fields, "gender");
  card.occupation = present(fields, "occupation");
  card.description = present(fields, "description").value_or("");
  card.problem = present(fields, "problem").value_or("");
  return card;
}

PersonaCard extract_card(const SourceText& source, const PipelineContext& ctx) {
  if (trim(source.text).empty()) throw StageError("source " + source.id + " has no text");
  const PromptValues values{{"dialogue", source.text}};
  auto card = parse_card_reply(ask(ctx, prompt_names::extract_persona, values), source.id, source.source);
  if (card.description.empty() && card.problem.empty()) {
    card = parse_card_reply(
        reask(ctx, prompt_names::extract_persona, values,
              "the reply had neither a 'description:' line nor a 'problem:' line"),
        source.id, source.source);
  }
  if (card.description.empty() && card.problem.empty()) {
    throw StageError("extraction failed for " + source.id + ": reply lacks description and problem");
  }
  return card;
}

// ---------------------------------------------------------------------------

std::optional<bool> parse_verdict(std::string_view reply) {
  const auto fields = parse_key_values(reply, [](std::string_view k) { return k == "verdict"; });
  std::string text;
  if (auto it = fields.find("verdict"); it != fields.end()) {
    text = it->second;
  } else {
    std::istringstream in{std::string(reply)};
    std::getline(in, text);
  }
  // First word decides.
  std::istringstream words(text);
  std::string word;
  words >> word;
  const auto w = normalize_label(word);
  if (w == "yes" || w == "keep" || w == "true") return true;
  if (w == "no" || w == "drop" || w == "false") return false;
  return std::nullopt;
}

FilterVerdict filter_card(const PersonaCard& card, const PipelineContext& ctx) {
  if (trim(card.problem).empty()) {
    return {false, "missing emotional content: the card states no problem or emotions"};
  }
  if (trim(card.description).empty()) {
    return {false, "missing socio-demographic description"};
  }
  const PromptValues values{{"persona", format_card(card)}};
  auto reply = ask(ctx, prompt_names::filter_persona, values);
  auto verdict = parse_verdict(reply);
  if (!verdict) {
    reply = reask(ctx, prompt_names::filter_persona, values,
                  "the first line must be 'verdict: yes' or 'verdict: no'");
    verdict = parse_verdict(reply);
  }
  if (!verdict) return {false, "unparseable verdict"};
  const auto fields = parse_key_values(reply, [](std::string_view k) { return k == "reason"; });
  std::string reason;
  if (auto it = fields.find("reason"); it != fields.end()) reason = it->second;
  if (reason.empty()) reason = *verdict ? "accepted by reviewer" : "rejected by reviewer";
  return {*verdict, reason};
}

// ---------------------------------------------------------------------------

TraitSentences parse_trait_sentences(std::string_view reply, std::span<const Family> families) {
  const auto fields = parse_key_values(
      reply, [&](std::string_view k) { return resolve_dimension(k, families).has_value(); });
  TraitSentences out;
  for (const auto& [key, value] : fields) {
    if (is_placeholder_value(value)) continue;
    if (auto d = resolve_dimension(key, families)) out.emplace(*d, value);
  }
  return out;
}

PersonaCard expand_card(std::string id, std::string_view seed, const PipelineContext& ctx,
                        std::span<const Family> families) {
  if (trim(seed).empty()) throw StageError("expansion seed " + id + " is empty");
  const PromptValues values{{"persona", trim(seed)}, {"dimension_list", dimension_list(families)}};

  auto build = [&](const std::string& reply) {
    auto card = parse_card_reply(reply, id, Source::persona_hub);
    if (card.description.empty()) card.description = trim(seed);
    card.trait_sentences = parse_trait_sentences(reply, families);
    return card;
  };
  auto problems = [&](const PersonaCard& card) {
    std::vector<std::string> out;
    if (!card.age) out.emplace_back("age");
    if (!card.gender) out.emplace_back("gender");
    if (!card.occupation) out.emplace_back("occupation");
    const auto missing = missing_dimensions(*card.trait_sentences, families);
    if (!missing.empty()) out.push_back(join_names(missing));
    return out;
  };
  auto describe = [](const std::vector<std::string>& parts) {
    std::string out = "missing ";
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
    return out;
  };

  auto card = build(ask(ctx, prompt_names::expand_persona, values));
  if (auto p = problems(card); !p.empty()) {
    card = build(reask(ctx, prompt_names::expand_persona, values, describe(p)));
    if (auto again = problems(card); !again.empty()) {
      throw StageError("expansion failed for " + id + ": " + describe(again));
    }
  }
  return card;
}

PersonaCard describe_traits(PersonaCard card, const PipelineContext& ctx,
                            std::span<const Family> families) {
  const PromptValues values{{"persona", format_card(card)},
                            {"dimension_list", dimension_list(families)}};
  auto sentences = parse_trait_sentences(ask(ctx, prompt_names::describe_traits, values), families);
  if (auto missing = missing_dimensions(sentences, families); !missing.empty()) {
    sentences = parse_trait_sentences(
        reask(ctx, prompt_names::describe_traits, values, "missing " + join_names(missing)), families);
    if (auto again = missing_dimensions(sentences, families); !again.empty()) {
      throw StageError("trait description failed for " + card.id + ": missing " + join_names(again));
    }
  }
  if (card.trait_sentences) {
    for (auto& [d, s] : sentences) (*card.trait_sentences)[d] = std::move(s);
  } else {
    card.trait_sentences = std::move(sentences);
  }
  return card;
}

// ---------------------------------------------------------------------------

CorpusStats corpus_stats(std::span<const PersonaCard> cards) {
  CorpusStats s;
  s.num_personas = cards.size();
  if (cards.empty()) return s;
  std::size_t desc_words = 0;
  std::size_t prob_words = 0;
  for (const auto& c : cards) {
    desc_words += word_count(c.description);
    prob_words += word_count(c.problem);
    s.num_with_age += c.age.has_value();
    s.num_with_gender += c.gender.has_value();
    s.num_with_occupation += c.occupation.has_value();
  }
  s.avg_words_description = static_cast<double>(desc_words) / static_cast<double>(cards.size());
  s.avg_words_problem = static_cast<double>(prob_words) / static_cast<double>(cards.size());
  return s;
}

}  // namespace pesc::persona
