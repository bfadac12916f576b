#include <gtest/gtest.h>

#include "pesc/error.hpp"
#include "pesc/persona.hpp"
#include "support.hpp"

namespace pesc::persona {
namespace {

using nlohmann::json;
using testing::MockSession;
using testing::TempDir;

constexpr Family kBoth[] = {Family::hexaco, Family::csi};

const char* kGoodCard =
    "age: 34\n"
    "gender: female\n"
    "occupation: nurse\n"
    "description: A nurse on night shifts living alone.\n"
    "problem: Feels exhausted and isolated.\n";

// ----------------------------------------------------------------------------
// card parsing

TEST(CardReply, AllFields) {
  const auto c = parse_card_reply(kGoodCard, "id1", Source::esconv);
  EXPECT_EQ(c.id, "id1");
  EXPECT_EQ(c.age, 34);
  EXPECT_EQ(c.gender, "female");
  EXPECT_EQ(c.occupation, "nurse");
  EXPECT_EQ(c.description, "A nurse on night shifts living alone.");
  EXPECT_EQ(c.problem, "Feels exhausted and isolated.");
  EXPECT_EQ(c.source, Source::esconv);
}

TEST(CardReply, PlaceholdersStayAbsent) {
  const auto c = parse_card_reply(
      "Age: unknown\nGender: N/A\nOccupation: not mentioned\nDescription: A student.\nProblem: Exam stress.\n", "x",
      Source::cams);
  EXPECT_FALSE(c.age);
  EXPECT_FALSE(c.gender);
  EXPECT_FALSE(c.occupation);
  EXPECT_EQ(c.description, "A student.");
}

TEST(CardReply, AgeTextAndContinuationLines) {
  const auto c = parse_card_reply(
      "age: about 40 years old\ndescription: Line one\nline two\nproblem: Grief.\n", "x", Source::esconv);
  EXPECT_EQ(c.age, 40);
  EXPECT_NE(c.description.find("line two"), std::string::npos);
  EXPECT_FALSE(parse_card_reply("age: 400\n", "x", Source::esconv).age);
}

// ----------------------------------------------------------------------------
// extraction

TEST(Extract, UsesFirstGoodReply) {
  MockSession s(json{{"rules", {{{"contains", "Extract the persona"}, {"response", kGoodCard}}}}});
  const auto card = extract_card({"d1", Source::esconv, "Seeker: I work nights."}, s.ctx());
  EXPECT_EQ(card.occupation, "nurse");
  EXPECT_EQ(s.backend->calls(), 1u);
}

TEST(Extract, ReasksOnceThenSucceeds) {
  MockSession s(json{{"rules",
                      {{{"contains", "could not be used"}, {"response", kGoodCard}},
                       {{"contains", "Extract the persona"}, {"response", "I cannot tell."}}}}});
  const auto card = extract_card({"d1", Source::esconv, "Seeker: hi"}, s.ctx());
  EXPECT_EQ(card.age, 34);
  EXPECT_EQ(s.backend->calls(), 2u);
}

TEST(Extract, FailsAfterOneReask) {
  MockSession s(json{{"rules", {{{"contains", "Extract the persona"}, {"response", "age: 30"}}}}});
  EXPECT_THROW(extract_card({"d1", Source::esconv, "Seeker: hi"}, s.ctx()), StageError);
  EXPECT_EQ(s.backend->calls(), 2u);
  EXPECT_THROW(extract_card({"d2", Source::esconv, "  "}, s.ctx()), StageError);
}

// ----------------------------------------------------------------------------
// filter

PersonaCard full_card() { return parse_card_reply(kGoodCard, "p", Source::esconv); }

TEST(Filter, Verdicts) {
  EXPECT_EQ(parse_verdict("verdict: yes\nreason: fine"), true);
  EXPECT_EQ(parse_verdict("Verdict: No."), false);
  EXPECT_EQ(parse_verdict("yes, it is usable"), true);
  EXPECT_FALSE(parse_verdict("maybe"));
}

TEST(Filter, KeepsAndDropsWithReason) {
  MockSession keep(json{{"rules", {{{"contains", "usable"}, {"response", "verdict: yes\nreason: all three hold"}}}}});
  const auto v = filter_card(full_card(), keep.ctx());
  EXPECT_TRUE(v.keep);
  EXPECT_EQ(v.reason, "all three hold");

  MockSession drop(json{{"rules", {{{"contains", "usable"}, {"response", "verdict: no\nreason: no emotions"}}}}});
  const auto d = filter_card(full_card(), drop.ctx());
  EXPECT_FALSE(d.keep);
  EXPECT_EQ(d.reason, "no emotions");
}

TEST(Filter, EmptyProblemRejectedWithoutCall) {
  MockSession s(json{{"default", "verdict: yes"}});
  auto c = full_card();
  c.problem.clear();
  const auto v = filter_card(c, s.ctx());
  EXPECT_FALSE(v.keep);
  EXPECT_NE(v.reason.find("emotional"), std::string::npos);
  EXPECT_EQ(s.backend->calls(), 0u);
}

TEST(Filter, UnparseableAfterReaskIsDrop) {
  MockSession s(json{{"default", "hmm, hard to say"}});
  const auto v = filter_card(full_card(), s.ctx());
  EXPECT_FALSE(v.keep);
  EXPECT_EQ(s.backend->calls(), 2u);
}

// ----------------------------------------------------------------------------
// trait sentences, expansion, description

TEST(TraitSentences, QualifiedAndAmbiguousNames) {
  const auto s = parse_trait_sentences(
      "HEXACO.Emotionality: worries a lot\nCSI.Emotionality: tears up when talking\nExtraversion: quiet\n"
      "Emotionality: ambiguous\n",
      kBoth);
  EXPECT_EQ(s.at(Dimension(HexacoDim::Emotionality)), "worries a lot");
  EXPECT_EQ(s.at(Dimension(CsiDim::Emotionality)), "tears up when talking");
  // A bare name shared by both families is not a key, so it continues the line above.
  EXPECT_EQ(s.at(Dimension(HexacoDim::Extraversion)), "quiet Emotionality: ambiguous");
  EXPECT_EQ(s.size(), 3u);
  // Restricting to one family makes the bare name resolve.
  constexpr Family csi_only[] = {Family::csi};
  EXPECT_EQ(parse_trait_sentences("Emotionality: x\n", csi_only).count(Dimension(CsiDim::Emotionality)), 1u);
}

std::string expand_reply() {
  return std::string("age: 61\ngender: male\noccupation: retired athlete\n"
                     "description: A former sprinter.\nproblem: Misses the team.\n") +
         testing::all_trait_lines("a fitting sentence");
}

TEST(Expand, FullCardFromSeed) {
  MockSession s(json{{"rules", {{{"contains", "Expand the short persona"}, {"response", expand_reply()}}}}});
  const auto c = expand_card("seed-1", "A retired athlete.", s.ctx(), kBoth);
  EXPECT_EQ(c.age, 61);
  EXPECT_EQ(c.source, Source::persona_hub);
  ASSERT_TRUE(c.trait_sentences);
  EXPECT_EQ(c.trait_sentences->size(), 12u);
  EXPECT_FALSE(find_violation(c));
}

TEST(Expand, MissingDimensionsNamedInError) {
  MockSession s(json{{"rules", {{{"contains", "Expand"}, {"response", "age: 61\ngender: male\noccupation: x\n"}}}}});
  try {
    expand_card("seed-1", "A retired athlete.", s.ctx(), kBoth);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_NE(std::string(e.what()).find("HEXACO.HonestyHumility"), std::string::npos);
  }
  EXPECT_EQ(s.backend->calls(), 2u);
}

TEST(DescribeTraits, AddsSentencesKeepsCard) {
  MockSession s(json{{"rules", {{{"contains", "write one sentence for each"}, {"response", testing::all_trait_lines()}}}}});
  const auto base = full_card();
  const auto c = describe_traits(base, s.ctx(), kBoth);
  EXPECT_EQ(c.description, base.description);
  ASSERT_TRUE(c.trait_sentences);
  EXPECT_EQ(c.trait_sentences->size(), 12u);
}

// ----------------------------------------------------------------------------
// corpus statistics

TEST(CorpusStats, TenCardHandTable) {
  // description words, problem words, age?, gender?, occupation?
  struct Row {
    const char* description;
    const char* problem;
    bool age;
    bool gender;
    bool occupation;
  };
  const Row rows[] = {
      {"one two three", "a b", true, true, false},        // 3, 2
      {"one", "a b c d", false, true, true},              // 1, 4
      {"one two three four five", "a", true, false, false},  // 5, 1
      {"one two", "a b c", true, true, true},             // 2, 3
      {"", "a b", false, false, false},                   // 0, 2
      {"one two three four", "a b c d e", true, true, false},  // 4, 5
      {"one two three", "", false, true, false},          // 3, 0
      {"one", "a", true, false, true},                    // 1, 1
      {"one two three four five six", "a b c", false, false, true},  // 6, 3
      {"one two three four five", "a b c d", true, true, true},    // 5, 4
  };
  std::vector<PersonaCard> cards;
  for (const auto& r : rows) {
    PersonaCard c;
    c.id = "c" + std::to_string(cards.size());
    c.description = r.description;
    c.problem = r.problem;
    if (r.age) c.age = 30;
    if (r.gender) c.gender = "x";
    if (r.occupation) c.occupation = "y";
    cards.push_back(c);
  }
  const auto s = corpus_stats(cards);
  EXPECT_EQ(s.num_personas, 10u);
  EXPECT_DOUBLE_EQ(s.avg_words_description, 3.0);  // 30 / 10
  EXPECT_DOUBLE_EQ(s.avg_words_problem, 2.5);      // 25 / 10
  EXPECT_EQ(s.num_with_age, 6u);
  EXPECT_EQ(s.num_with_gender, 6u);
  EXPECT_EQ(s.num_with_occupation, 5u);
}

TEST(CorpusStats, EmptyIsZero) {
  EXPECT_EQ(corpus_stats(std::vector<PersonaCard>{}), CorpusStats{});
}

// ----------------------------------------------------------------------------
// corpus adapters

TEST(Esconv, BundledSampleLoads) {
  const auto ds = load_esconv_dialogues(testing::data_dir() / "fixtures" / "esconv_sample.json");
  ASSERT_EQ(ds.size(), 12u);
  EXPECT_EQ(ds[0].id, "esconv-0000");
  for (const auto& d : ds) {
    EXPECT_EQ(d.condition, Condition::original);
    EXPECT_FALSE(find_violation(d)) << d.id;
  }
}

TEST(Esconv, SpeakerAliasesAndStrategies) {
  TempDir dir;
  testing::write_file(dir / "e.jsonl",
                      R"({"dialog":[{"speaker":"usr","content":"I lost my job."},)"
                      R"({"speaker":"sys","content":"How are you coping?","annotation":{"strategy":"Question"}},)"
                      R"({"speaker":"seeker","text":"  "}]})"
                      "\n"
                      R"({"id":"mine","dialog":[{"speaker":"seeker","content":"hi"}]})"
                      "\n");
  const auto ds = load_esconv_dialogues(dir / "e.jsonl");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds[0].id, "esconv-0000");
  ASSERT_EQ(ds[0].utterances.size(), 2u);  // blank turn dropped
  EXPECT_EQ(ds[0].utterances[1].strategy, Strategy::Question);
  EXPECT_EQ(ds[1].id, "mine");
  EXPECT_EQ(render_transcript(ds[0]), "Seeker: I lost my job.\nSupporter: How are you coping?");

  testing::write_file(dir / "bad.jsonl", R"({"dialog":[{"speaker":"robot","content":"x"}]})");
  EXPECT_THROW(load_esconv_dialogues(dir / "bad.jsonl"), CorpusError);
}

TEST(Posts, TitlesAndIds) {
  TempDir dir;
  testing::write_file(dir / "p.json", R"([{"title":"Help","text":"I am stressed."},{"id":"z","text":"ok"}])");
  const auto ps = load_posts(dir / "p.json", Source::dreaddit);
  ASSERT_EQ(ps.size(), 2u);
  EXPECT_EQ(ps[0].id, "dreaddit-0000");
  EXPECT_NE(ps[0].text.find("Help\nI am stressed."), std::string::npos);
  EXPECT_EQ(ps[1].id, "z");
}

}  // namespace
}  // namespace pesc::persona
