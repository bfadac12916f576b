#pragma once

// Persona cards: corpus adapters, extraction from seeker text, filtering,
// expansion of one-line seeds, trait descriptions and corpus statistics.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pesc/core.hpp"
#include "pesc/pipeline.hpp"

namespace pesc::persona {

// One extraction input: a rendered dialogue or a single post.
struct SourceText {
  std::string id;
  Source source = Source::esconv;
  std::string text;
};

// ESConv-style records: a JSON array or JSONL of objects with a "dialog"
// list of {"speaker": seeker|supporter|usr|sys, "content"|"text",
// "annotation": {"strategy"}}. Records without "id" are numbered
// "esconv-0000", "esconv-0001", ...
std::vector<Dialogue> load_esconv_dialogues(const std::filesystem::path& path);

// Flat post records (CAMS / Dreaddit style): objects with "text" and
// optional "id" and "title".
std::vector<SourceText> load_posts(const std::filesystem::path& path, Source source);

// "Seeker: ...\nSupporter: ..." transcript.
std::string render_transcript(const Dialogue& dialogue);

SourceText to_source(const Dialogue& dialogue, Source source = Source::esconv);

// Parses the five-line extraction reply. Placeholder values ("unknown")
// become absent fields; nothing is filled in that the reply does not say.
PersonaCard parse_card_reply(std::string_view reply, std::string id, Source source);

// Throws StageError when the reply lacks both description and problem
// after one re-ask.
PersonaCard extract_card(const SourceText& source, const PipelineContext& ctx);

struct FilterVerdict {
  bool keep = false;
  std::string reason;
};

// nullopt when the reply carries neither a yes nor a no.
std::optional<bool> parse_verdict(std::string_view reply);

FilterVerdict filter_card(const PersonaCard& card, const PipelineContext& ctx);

// Parses "<HEXACO.Dim>: sentence" lines for the given families.
TraitSentences parse_trait_sentences(std::string_view reply, std::span<const Family> families);

// Builds a full card from a one-line seed: age, gender, occupation and one
// sentence per dimension of every family. Throws StageError naming the
// missing pieces when a re-ask does not fix the reply.
PersonaCard expand_card(std::string id, std::string_view seed, const PipelineContext& ctx,
                        std::span<const Family> families);

// Adds one sentence per dimension of every family to an existing card.
PersonaCard describe_traits(PersonaCard card, const PipelineContext& ctx,
                            std::span<const Family> families);

struct CorpusStats {
  std::size_t num_personas = 0;
  double avg_words_description = 0.0;
  double avg_words_problem = 0.0;
  std::size_t num_with_age = 0;
  std::size_t num_with_gender = 0;
  std::size_t num_with_occupation = 0;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

CorpusStats corpus_stats(std::span<const PersonaCard> cards);

}  // namespace pesc::persona
