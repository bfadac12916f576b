#pragma once

// Domain types shared by every stage of the pipeline: trait dimensions,
// support strategies, persona cards, trait profiles and dialogues.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pesc {

// ---------------------------------------------------------------------------
// Dimensions

enum class Family : std::uint8_t { hexaco, csi };

inline constexpr std::size_t kDimsPerFamily = 6;

enum class HexacoDim : std::uint8_t {
  HonestyHumility,
  Emotionality,
  Extraversion,
  Agreeableness,
  Conscientiousness,
  OpennessToExperience,
};

enum class CsiDim : std::uint8_t {
  Expressiveness,
  Preciseness,
  VerbalAggressiveness,
  Questioningness,
  Emotionality,
  ImpressionManipulativeness,
};

std::string_view family_name(Family family);  // "HEXACO" / "CSI"
std::optional<Family> parse_family(std::string_view text);

// One trait dimension, namespaced by its inventory family so that
// HEXACO.Emotionality and CSI.Emotionality never compare equal.
class Dimension {
 public:
  constexpr Dimension(HexacoDim d) noexcept  // NOLINT(google-explicit-constructor)
      : family_(Family::hexaco), index_(static_cast<std::uint8_t>(d)) {}
  constexpr Dimension(CsiDim d) noexcept  // NOLINT(google-explicit-constructor)
      : family_(Family::csi), index_(static_cast<std::uint8_t>(d)) {}

  static Dimension from_index(Family family, std::size_t index);

  constexpr Family family() const noexcept { return family_; }
  constexpr std::size_t index() const noexcept { return index_; }

  // "Emotionality", "OpennessToExperience", ...
  std::string_view name() const;
  // "HEXACO.Emotionality"
  std::string qualified_name() const;
  // Column header used in matrix reports, e.g. "Extr." / "Expr.".
  std::string_view abbreviation() const;

  // Accepts qualified names ("CSI.Emotionality", "HEXACO-Honesty-Humility")
  // and, when `context` names the family, bare names ("Openness to
  // Experience"). Case, spaces and punctuation are ignored.
  static std::optional<Dimension> parse(std::string_view text,
                                        std::optional<Family> context = std::nullopt);

  friend constexpr auto operator<=>(const Dimension&, const Dimension&) = default;

 private:
  Family family_;
  std::uint8_t index_;
};

std::array<Dimension, kDimsPerFamily> dimensions_of(Family family);
std::array<Dimension, 2 * kDimsPerFamily> all_dimensions();

// ---------------------------------------------------------------------------
// Support strategies

enum class Strategy : std::uint8_t {
  Question,
  RestatementOrParaphrasing,
  ReflectionOfFeelings,
  SelfDisclosure,
  AffirmationAndReassurance,
  ProvidingSuggestions,
  Information,
  Others,
};

inline constexpr std::size_t kStrategyCount = 8;

const std::array<Strategy, kStrategyCount>& all_strategies();

// Canonical label, e.g. "Affirmation and Reassurance".
std::string_view strategy_label(Strategy s);
// Short lower-case label used in distribution tables, e.g. "affirmation and reass.".
std::string_view strategy_table_label(Strategy s);
// One-line definition shown to the generator.
std::string_view strategy_definition(Strategy s);

// Case- and punctuation-insensitive; accepts the canonical labels, the
// table abbreviations and the enumerator spellings; "&" reads as "and". Everything else is nullopt.
std::optional<Strategy> parse_strategy(std::string_view text);
// Same as parse_strategy but throws ValidationError listing the valid labels.
Strategy strategy_from_label(std::string_view text);

// ---------------------------------------------------------------------------
// Persona cards

enum class Source : std::uint8_t { esconv, cams, dreaddit, persona_hub, synthetic };

std::string_view to_string(Source s);
std::optional<Source> parse_source(std::string_view text);

using TraitSentences = std::map<Dimension, std::string>;

struct PersonaCard {
  std::string id;
  std::optional<int> age;
  std::optional<std::string> gender;
  std::optional<std::string> occupation;
  std::string description;
  std::string problem;
  std::optional<TraitSentences> trait_sentences;
  Source source = Source::synthetic;

  friend bool operator==(const PersonaCard&, const PersonaCard&) = default;
};

// ---------------------------------------------------------------------------
// Trait profiles

struct ScaleBounds {
  int min = 1;
  int max = 5;

  constexpr double midpoint() const noexcept { return 0.5 * (min + max); }
  constexpr bool contains(double v) const noexcept { return v >= min && v <= max; }
  friend bool operator==(const ScaleBounds&, const ScaleBounds&) = default;
};

using FamilyScores = std::array<std::optional<double>, kDimsPerFamily>;

struct Provenance {
  std::string model;
  std::string inventory_id;
  std::string timestamp;
  ScaleBounds scale;
  std::string run_id;  // empty when the profile is not part of a paired run

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct TraitProfile {
  std::string persona_id;
  FamilyScores hexaco;
  FamilyScores csi;
  Provenance provenance;

  const FamilyScores& scores(Family f) const { return f == Family::hexaco ? hexaco : csi; }
  FamilyScores& scores(Family f) { return f == Family::hexaco ? hexaco : csi; }
  std::optional<double> score(Dimension d) const { return scores(d.family())[d.index()]; }

  bool complete(Family f) const;
  bool complete() const { return complete(Family::hexaco) && complete(Family::csi); }
  bool partial() const { return !complete(); }

  friend bool operator==(const TraitProfile&, const TraitProfile&) = default;
};

// ---------------------------------------------------------------------------
// Dialogues

enum class Role : std::uint8_t { seeker, supporter };

enum class Condition : std::uint8_t { with_persona_traits, without_persona_traits, original };

std::string_view to_string(Role r);
std::optional<Role> parse_role(std::string_view text);
std::string_view to_string(Condition c);
std::optional<Condition> parse_condition(std::string_view text);

struct Utterance {
  Role role = Role::seeker;
  std::string text;
  std::optional<Strategy> strategy;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> utterances;
  Condition condition = Condition::original;
  std::optional<std::string> persona_id;

  // Synthesized dialogues carry a strategy on every supporter turn.
  bool strategy_annotated() const { return condition != Condition::original; }

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

// ---------------------------------------------------------------------------
// Invariant checks. `find_violation` returns a description of the first
// broken invariant; `validate` throws ValidationError with it.

std::optional<std::string> find_violation(const PersonaCard& card);
std::optional<std::string> find_violation(const TraitProfile& profile);
std::optional<std::string> find_violation(const Dialogue& dialogue);

template <class Record>
void validate(const Record& record);

// Lower-cases and strips everything that is not a letter or digit.
std::string normalize_label(std::string_view text);
// Whitespace-delimited token count.
std::size_t word_count(std::string_view text);
std::string trim(std::string_view text);
std::string trim_right(std::string_view text);

}  // namespace pesc
