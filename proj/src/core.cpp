#include "pesc/core.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "pesc/error.hpp"

namespace pesc {

namespace {

struct DimensionInfo {
  std::string_view name;
  std::string_view abbreviation;
  std::array<std::string_view, 2> aliases;  // normalized
};

constexpr std::array<DimensionInfo, kDimsPerFamily> kHexaco{{
    {"HonestyHumility", "Hone.", {"honesty", ""}},
    {"Emotionality", "Emot.", {"", ""}},
    {"Extraversion", "Extr.", {"extroversion", ""}},
    {"Agreeableness", "Agre.", {"", ""}},
    {"Conscientiousness", "Cons.", {"", ""}},
    {"OpennessToExperience", "Open.", {"openness", ""}},
}};

constexpr std::array<DimensionInfo, kDimsPerFamily> kCsi{{
    {"Expressiveness", "Expr.", {"", ""}},
    {"Preciseness", "Prec.", {"precision", ""}},
    {"VerbalAggressiveness", "Verb.", {"verbalaggression", ""}},
    {"Questioningness", "Ques.", {"", ""}},
    {"Emotionality", "Emot.", {"", ""}},
    {"ImpressionManipulativeness", "Impr.", {"", ""}},
}};

const DimensionInfo& info(Dimension d) {
  return d.family() == Family::hexaco ? kHexaco[d.index()] : kCsi[d.index()];
}

std::optional<std::size_t> match_in_family(const std::array<DimensionInfo, kDimsPerFamily>& table,
                                           std::string_view normalized) {
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (normalize_label(table[i].name) == normalized) return i;
    for (auto alias : table[i].aliases) {
      if (!alias.empty() && alias == normalized) return i;
    }
  }
  return std::nullopt;
}

struct StrategyInfo {
  Strategy value;
  std::string_view label;
  std::string_view table_label;
  std::string_view definition;
};

constexpr std::array<StrategyInfo, kStrategyCount> kStrategies{{
    {Strategy::Question, "Question", "question",
     "Ask an open or specific question about the problem so the seeker can put it into words."},
    {Strategy::RestatementOrParaphrasing, "Restatement or Paraphrasing", "restatement or paraph.",
     "Briefly say back what the seeker said in other words so they see their situation more clearly."},
    {Strategy::ReflectionOfFeelings, "Reflection of Feelings", "reflection of feelings",
     "Name and clarify the emotions the seeker is expressing."},
    {Strategy::SelfDisclosure, "Self-disclosure", "self-disclosure",
     "Share a comparable experience or feeling of your own to build rapport."},
    {Strategy::AffirmationAndReassurance, "Affirmation and Reassurance", "affirmation and reass.",
     "Point out the seeker's strengths and efforts and offer encouragement."},
    {Strategy::ProvidingSuggestions, "Providing Suggestions", "providing suggestions",
     "Propose possible next steps while leaving the decision to the seeker."},
    {Strategy::Information, "Information", "information",
     "Give facts, resources or explanations that are useful to the seeker."},
    {Strategy::Others, "Others", "others",
     "Greetings, small talk, or anything outside the categories above."},
}};

const StrategyInfo& info(Strategy s) { return kStrategies[static_cast<std::size_t>(s)]; }

}  // namespace

std::string normalize_label(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (unsigned char c : text) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::string trim(std::string_view text) {
  auto begin = std::find_if_not(text.begin(), text.end(),
                                [](unsigned char c) { return std::isspace(c); });
  auto end = std::find_if_not(text.rbegin(), text.rend(),
                              [](unsigned char c) { return std::isspace(c); })
                 .base();
  return begin < end ? std::string(begin, end) : std::string();
}

std::string trim_right(std::string_view text) {
  auto end = std::find_if_not(text.rbegin(), text.rend(),
                              [](unsigned char c) { return std::isspace(c); })
                 .base();
  return std::string(text.begin(), end);
}

// ---------------------------------------------------------------------------

std::string_view family_name(Family family) {
  return family == Family::hexaco ? "HEXACO" : "CSI";
}

std::optional<Family> parse_family(std::string_view text) {
  const auto n = normalize_label(text);
  if (n == "hexaco") return Family::hexaco;
  if (n == "csi") return Family::csi;
  return std::nullopt;
}

Dimension Dimension::from_index(Family family, std::size_t index) {
  if (index >= kDimsPerFamily) throw std::out_of_range("dimension index out of range");
  if (family == Family::hexaco) return Dimension(static_cast<HexacoDim>(index));
  return Dimension(static_cast<CsiDim>(index));
}

std::string_view Dimension::name() const { return info(*this).name; }

std::string Dimension::qualified_name() const {
  std::string out(family_name(family_));
  out += '.';
  out += name();
  return out;
}

std::string_view Dimension::abbreviation() const { return info(*this).abbreviation; }

std::optional<Dimension> Dimension::parse(std::string_view text, std::optional<Family> context) {
  const auto normalized = normalize_label(text);
  if (normalized.empty()) return std::nullopt;

  std::optional<Family> family = context;
  std::string_view rest = normalized;
  for (Family f : {Family::hexaco, Family::csi}) {
    const auto prefix = normalize_label(family_name(f));
    if (rest.size() > prefix.size() && rest.substr(0, prefix.size()) == prefix) {
      if (context && *context != f) return std::nullopt;
      family = f;
      rest.remove_prefix(prefix.size());
      break;
    }
  }
  if (!family) return std::nullopt;

  const auto& table = *family == Family::hexaco ? kHexaco : kCsi;
  if (auto idx = match_in_family(table, rest)) return from_index(*family, *idx);
  return std::nullopt;
}

std::array<Dimension, kDimsPerFamily> dimensions_of(Family family) {
  std::array<Dimension, kDimsPerFamily> out{
      Dimension::from_index(family, 0), Dimension::from_index(family, 1),
      Dimension::from_index(family, 2), Dimension::from_index(family, 3),
      Dimension::from_index(family, 4), Dimension::from_index(family, 5)};
  return out;
}

std::array<Dimension, 2 * kDimsPerFamily> all_dimensions() {
  const auto h = dimensions_of(Family::hexaco);
  const auto c = dimensions_of(Family::csi);
  return {h[0], h[1], h[2], h[3], h[4], h[5], c[0], c[1], c[2], c[3], c[4], c[5]};
}

// ---------------------------------------------------------------------------

const std::array<Strategy, kStrategyCount>& all_strategies() {
  static const std::array<Strategy, kStrategyCount> values = [] {
    std::array<Strategy, kStrategyCount> out{};
    for (std::size_t i = 0; i < kStrategyCount; ++i) out[i] = kStrategies[i].value;
    return out;
  }();
  return values;
}

std::string_view strategy_label(Strategy s) { return info(s).label; }
std::string_view strategy_table_label(Strategy s) { return info(s).table_label; }
std::string_view strategy_definition(Strategy s) { return info(s).definition; }

std::optional<Strategy> parse_strategy(std::string_view text) {
  std::string spelled;
  for (char c : text) {
    if (c == '&') spelled += " and ";
    else spelled += c;
  }
  const auto n = normalize_label(spelled);
  if (n.empty()) return std::nullopt;
  for (const auto& s : kStrategies) {
    if (n == normalize_label(s.label) || n == normalize_label(s.table_label)) return s.value;
  }
  return std::nullopt;
}

Strategy strategy_from_label(std::string_view text) {
  if (auto s = parse_strategy(text)) return *s;
  std::ostringstream msg;
  msg << "unknown strategy label '" << text << "'; valid labels are: ";
  for (std::size_t i = 0; i < kStrategies.size(); ++i) {
    if (i) msg << ", ";
    msg << kStrategies[i].label;
  }
  throw ValidationError(msg.str());
}

// ---------------------------------------------------------------------------

std::string_view to_string(Source s) {
  switch (s) {
    case Source::esconv: return "esconv";
    case Source::cams: return "cams";
    case Source::dreaddit: return "dreaddit";
    case Source::persona_hub: return "persona_hub";
    case Source::synthetic: return "synthetic";
  }
  return "synthetic";
}

std::optional<Source> parse_source(std::string_view text) {
  for (Source s : {Source::esconv, Source::cams, Source::dreaddit, Source::persona_hub,
                   Source::synthetic}) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

std::string_view to_string(Role r) { return r == Role::seeker ? "seeker" : "supporter"; }

std::optional<Role> parse_role(std::string_view text) {
  if (text == "seeker") return Role::seeker;
  if (text == "supporter") return Role::supporter;
  return std::nullopt;
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::with_persona_traits: return "with_persona_traits";
    case Condition::without_persona_traits: return "without_persona_traits";
    case Condition::original: return "original";
  }
  return "original";
}

std::optional<Condition> parse_condition(std::string_view text) {
  for (Condition c : {Condition::with_persona_traits, Condition::without_persona_traits,
                      Condition::original}) {
    if (text == to_string(c)) return c;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

bool TraitProfile::complete(Family f) const {
  const auto& s = scores(f);
  return std::all_of(s.begin(), s.end(), [](const auto& v) { return v.has_value(); });
}

std::optional<std::string> find_violation(const PersonaCard& card) {
  if (card.id.empty()) return "persona card id is empty";
  if (card.age && (*card.age < 0 || *card.age > 150)) {
    return "age " + std::to_string(*card.age) + " is not a plausible age";
  }
  if (card.trait_sentences) {
    // One sentence for every dimension of each family the card was expanded for.
    for (Family f : {Family::hexaco, Family::csi}) {
      std::size_t present = 0;
      for (auto d : dimensions_of(f)) {
        auto it = card.trait_sentences->find(d);
        if (it != card.trait_sentences->end()) {
          if (trim(it->second).empty()) return "trait sentence for " + d.qualified_name() + " is empty";
          ++present;
        }
      }
      if (present != 0 && present != kDimsPerFamily) {
        return "trait_sentences covers " + std::to_string(present) + " of 6 " +
               std::string(family_name(f)) + " dimensions";
      }
    }
    if (card.trait_sentences->empty()) return "trait_sentences is present but empty";
  }
  return std::nullopt;
}

std::optional<std::string> find_violation(const TraitProfile& profile) {
  if (profile.persona_id.empty()) return "trait profile persona_id is empty";
  const auto& scale = profile.provenance.scale;
  if (scale.min >= scale.max) return "degenerate scale bounds";
  for (auto d : all_dimensions()) {
    if (auto v = profile.score(d); v && !scale.contains(*v)) {
      std::ostringstream msg;
      msg << d.qualified_name() << " score " << *v << " outside [" << scale.min << ", "
          << scale.max << "]";
      return msg.str();
    }
  }
  return std::nullopt;
}

std::optional<std::string> find_violation(const Dialogue& dialogue) {
  if (dialogue.id.empty()) return "dialogue id is empty";
  if (dialogue.utterances.empty()) return "dialogue " + dialogue.id + " has no utterances";
  for (std::size_t i = 0; i < dialogue.utterances.size(); ++i) {
    const auto& u = dialogue.utterances[i];
    const auto where = "dialogue " + dialogue.id + " utterance " + std::to_string(i);
    if (trim(u.text).empty()) return where + " has empty text";
    if (u.role == Role::seeker && u.strategy) return where + " is a seeker turn with a strategy";
    if (u.role == Role::supporter && dialogue.strategy_annotated() && !u.strategy) {
      return where + " is a supporter turn without a strategy";
    }
  }
  return std::nullopt;
}

template <class Record>
void validate(const Record& record) {
  if (auto v = find_violation(record)) throw ValidationError(*v);
}

template void validate<PersonaCard>(const PersonaCard&);
template void validate<TraitProfile>(const TraitProfile&);
template void validate<Dialogue>(const Dialogue&);

}  // namespace pesc
