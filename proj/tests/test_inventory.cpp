#include <gtest/gtest.h>

#include <random>

#include "pesc/error.hpp"
#include "pesc/inventory.hpp"
#include "support.hpp"

namespace pesc::inventory {
namespace {

using nlohmann::json;
using testing::MockSession;

const char* kTiny =
    "inventory = tiny\n"
    "family = CSI\n"
    "scale = 1..5\n"
    "P1 | Preciseness | false | I choose my words with care.\n"
    "P2 | Preciseness | true | I ramble.\n"
    "Q1 | Questioningness | false | I like to ask why.\n";

PersonaCard persona(std::string id = "p1") {
  PersonaCard c;
  c.id = std::move(id);
  c.description = "A careful accountant.";
  c.problem = "Stress at work.";
  return c;
}

// One rule per statement text.
json answer_fixture(const Inventory& inv, const std::map<std::string, std::string>& by_item) {
  json rules = json::array();
  for (const auto& item : inv.items) {
    auto it = by_item.find(item.id);
    if (it == by_item.end()) continue;
    rules.push_back({{"contains", "Statement: " + item.text}, {"response", it->second}});
  }
  return {{"rules", rules}};
}

// ----------------------------------------------------------------------------
// definition files

TEST(Parse, TinyInventory) {
  const auto inv = parse_inventory(kTiny);
  EXPECT_EQ(inv.id, "tiny");
  EXPECT_EQ(inv.family, Family::csi);
  EXPECT_EQ(inv.scale, (ScaleBounds{1, 5}));
  ASSERT_EQ(inv.items.size(), 3u);
  EXPECT_EQ(inv.items[1].dimension, Dimension(CsiDim::Preciseness));
  EXPECT_TRUE(inv.items[1].reverse_keyed);
  EXPECT_EQ(inv.find("Q1")->text, "I like to ask why.");
  EXPECT_EQ(inv.find("Z9"), nullptr);
}

TEST(Parse, ErrorsNameTheLine) {
  const std::string head = "inventory = x\nfamily = HEXACO\nscale = 1..5\n";
  const std::vector<std::string> bad{
      head + "H1 | Honesty | maybe | text\n",
      head + "H1 | Preciseness | false | text\n",
      head + "H1 | HonestyHumility | false\n",
      head + "H1 | HonestyHumility | false | a\nH1 | HonestyHumility | false | b\n",
      head + "H1 | HonestyHumility | false |   \n",
      "inventory = x\nfamily = BIG5\nscale = 1..5\n",
      "inventory = x\nfamily = HEXACO\nscale = 5..1\n",
      "inventory = x\nfamily = HEXACO\nscale = 1..5\ncolour = red\n",
      "H1 | HonestyHumility | false | text\n",
      head,
  };
  for (const auto& text : bad) {
    EXPECT_THROW(parse_inventory(text, "bad.inv"), ValidationError) << text;
  }
  try {
    parse_inventory(head + "H1 | Honesty | maybe | text\n", "bad.inv");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("bad.inv"), std::string::npos);
    EXPECT_NE(what.find("4"), std::string::npos);
  }
}

TEST(Parse, BundledInventoriesPair) {
  const auto pair = testing::bundled_inventories();
  EXPECT_EQ(pair.hexaco.id, "hexaco-test12");
  EXPECT_EQ(pair.csi.id, "csi-test12");
  EXPECT_EQ(pair.hexaco.items.size(), 12u);
  EXPECT_NO_THROW(require_csi_layout(pair.csi));
  // The short form is not the 60-item instrument.
  EXPECT_THROW(require_hexaco60_layout(pair.hexaco), ValidationError);
  EXPECT_THROW(pair_inventories({pair.hexaco, pair.hexaco}), ValidationError);
  EXPECT_THROW(pair_inventories({pair.hexaco}), ValidationError);
  auto other = pair.csi;
  other.scale = {1, 7};
  EXPECT_THROW(pair_inventories({pair.hexaco, other}), ValidationError);
}

TEST(Layout, Hexaco60Structure) {
  std::string text = "inventory = h60\nfamily = HEXACO\nscale = 1..5\n";
  for (auto d : dimensions_of(Family::hexaco))
    for (int k = 0; k < 10; ++k)
      text += std::string(d.name()) + std::to_string(k) + " | " + std::string(d.name()) + " | false | item\n";
  EXPECT_NO_THROW(require_hexaco60_layout(parse_inventory(text)));
  EXPECT_THROW(require_csi_layout(parse_inventory(text)), ValidationError);
  EXPECT_THROW(require_csi_layout(parse_inventory(kTiny)), ValidationError);
}

// ----------------------------------------------------------------------------
// Likert parsing

TEST(Likert, Replies) {
  const ScaleBounds s{1, 5};
  EXPECT_EQ(parse_likert("4", s), 4);
  EXPECT_EQ(parse_likert("I would say 4.", s), 4);
  EXPECT_EQ(parse_likert("Rating: 2 (disagree)", s), 2);
  EXPECT_EQ(parse_likert("7, no wait, 3", s), 3);  // first in-scale integer
  EXPECT_FALSE(parse_likert("3.5", s));
  EXPECT_FALSE(parse_likert("0", s));
  EXPECT_FALSE(parse_likert("strongly agree", s));
  EXPECT_FALSE(parse_likert("", s));
  EXPECT_EQ(parse_likert("6", {1, 7}), 6);
}

TEST(ReverseKey, Involution) {
  for (ScaleBounds s : {ScaleBounds{1, 5}, ScaleBounds{1, 7}, ScaleBounds{0, 10}}) {
    for (int v = s.min; v <= s.max; ++v) {
      EXPECT_EQ(reverse_key(reverse_key(v, s), s), v);
      EXPECT_TRUE(s.contains(reverse_key(v, s)));
    }
  }
  static_assert(reverse_key(1, ScaleBounds{1, 5}) == 5);
  static_assert(reverse_key(2, ScaleBounds{1, 5}) == 4);
}

// ----------------------------------------------------------------------------
// administration and scoring

TEST(Administer, ItemwiseHandScores) {
  const auto inv = parse_inventory(kTiny);
  MockSession s(answer_fixture(inv, {{"P1", "4"}, {"P2", "I'd say 2"}, {"Q1", "5"}}));
  const auto record = administer(persona(), inv, s.ctx());
  EXPECT_EQ(record.responses.at("P1"), 4);
  EXPECT_EQ(record.responses.at("P2"), 2);
  EXPECT_EQ(record.missing_count(), 0u);
  const auto profile = score(record, inv);
  // Preciseness: (4 + (6 - 2)) / 2 = 4; Questioningness: 5.
  EXPECT_EQ(profile.csi[static_cast<std::size_t>(CsiDim::Preciseness)], 4.0);
  EXPECT_EQ(profile.csi[static_cast<std::size_t>(CsiDim::Questioningness)], 5.0);
  EXPECT_FALSE(profile.csi[static_cast<std::size_t>(CsiDim::Expressiveness)]);
  EXPECT_TRUE(profile.partial());
  EXPECT_EQ(profile.provenance.inventory_id, "tiny");
}

TEST(Administer, ReaskRescuesOneItem) {
  const auto inv = parse_inventory(kTiny);
  auto fx = answer_fixture(inv, {{"P1", "4"}, {"Q1", "5"}});
  // P2 first answers in words, then with a number on the re-ask.
  fx["rules"].insert(fx["rules"].begin(), json{{"contains", {"I ramble.", "could not be used"}}, {"response", "1"}});
  fx["rules"].push_back({{"contains", "I ramble."}, {"response", "rarely"}});
  MockSession s(fx);
  const auto record = administer(persona(), inv, s.ctx());
  EXPECT_EQ(record.responses.at("P2"), 1);
  EXPECT_EQ(s.backend->calls(), 4u);
}

TEST(Administer, MissingThresholdIsInclusive) {
  // 1 of 3 missing = 0.333.
  const auto inv = parse_inventory(kTiny);
  auto fx = answer_fixture(inv, {{"P1", "4"}, {"Q1", "5"}});
  fx["default"] = "no idea";
  {
    MockSession s(fx);
    AdministerOptions opt;
    opt.max_missing_fraction = 0.34;
    const auto record = administer(persona(), inv, s.ctx(), opt);
    EXPECT_EQ(record.missing_count(), 1u);
    EXPECT_FALSE(record.responses.at("P2"));
    // Preciseness keeps the one answered item.
    EXPECT_EQ(score(record, inv).csi[static_cast<std::size_t>(CsiDim::Preciseness)], 4.0);
  }
  {
    MockSession s(fx);
    AdministerOptions opt;
    opt.max_missing_fraction = 0.2;
    try {
      administer(persona(), inv, s.ctx(), opt);
      FAIL();
    } catch (const AdministrationError& e) {
      EXPECT_EQ(e.record().missing_count(), 1u);
      EXPECT_EQ(e.record().responses.at("P1"), 4);
    }
  }
}

TEST(Administer, BatchedWithItemwiseFallback) {
  const auto inv = parse_inventory(kTiny);
  auto fx = answer_fixture(inv, {{"Q1", "2"}});
  // The batched reply omits Q1, so only Q1 goes out itemwise.
  fx["rules"].insert(fx["rules"].begin(), json{{"contains", "Statements:"}, {"response", "P1: 5\np2: 1\n"}});
  MockSession s(fx);
  AdministerOptions opt;
  opt.batched = true;
  const auto record = administer(persona(), inv, s.ctx(), opt);
  EXPECT_EQ(record.responses.at("P1"), 5);
  EXPECT_EQ(record.responses.at("P2"), 1);
  EXPECT_EQ(record.responses.at("Q1"), 2);
  EXPECT_EQ(s.backend->calls(), 2u);
}

TEST(Measure, BothFamiliesMerged) {
  const auto pair = testing::bundled_inventories();
  std::map<std::string, std::string> hex;
  std::map<std::string, std::string> csi;
  for (const auto& it : pair.hexaco.items) hex[it.id] = it.reverse_keyed ? "2" : "5";
  for (const auto& it : pair.csi.items) csi[it.id] = it.reverse_keyed ? "5" : "1";
  auto fx = answer_fixture(pair.hexaco, hex);
  const auto csi_fx = answer_fixture(pair.csi, csi);
  for (const auto& r : csi_fx["rules"]) fx["rules"].push_back(r);
  MockSession s(fx);
  const auto m = measure(persona(), pair, s.ctx());
  EXPECT_TRUE(m.profile.complete());
  for (auto d : dimensions_of(Family::hexaco)) EXPECT_EQ(m.profile.score(d), 4.5) << d.qualified_name();
  for (auto d : dimensions_of(Family::csi)) EXPECT_EQ(m.profile.score(d), 1.0) << d.qualified_name();
  EXPECT_EQ(m.profile.provenance.inventory_id, "hexaco-test12+csi-test12");
  EXPECT_FALSE(find_violation(m.profile));
}

TEST(Score, RejectsForeignAndOffScaleRecords) {
  const auto inv = parse_inventory(kTiny);
  AdministrationRecord r;
  r.persona_id = "p";
  r.inventory_id = "other";
  EXPECT_THROW(score(r, inv), ValidationError);
  r.inventory_id = "tiny";
  r.responses["P1"] = 9;
  EXPECT_THROW(score(r, inv), ValidationError);
}

TEST(ScoreProperty, RandomAnswersStayOnScaleAndMatchHandMean) {
  const auto pair = testing::bundled_inventories();
  const auto& inv = pair.hexaco;
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    AdministrationRecord r;
    r.persona_id = "p";
    r.inventory_id = inv.id;
    r.scale = inv.scale;
    std::array<double, 6> sum{};
    std::array<int, 6> n{};
    for (const auto& item : inv.items) {
      if (rng() % 5 == 0) {
        r.responses[item.id] = std::nullopt;
        continue;
      }
      const int v = 1 + static_cast<int>(rng() % 5);
      r.responses[item.id] = v;
      sum[item.dimension.index()] += item.reverse_keyed ? 6 - v : v;
      ++n[item.dimension.index()];
    }
    const auto p = score(r, inv);
    EXPECT_FALSE(find_violation(p));
    for (std::size_t d = 0; d < 6; ++d) {
      if (n[d] == 0) {
        EXPECT_FALSE(p.hexaco[d]);
      } else {
        ASSERT_TRUE(p.hexaco[d]);
        EXPECT_DOUBLE_EQ(*p.hexaco[d], sum[d] / n[d]);
      }
    }
  }
}

TEST(ScoreProperty, ConstantAnswerOnBalancedKeysIsMidpoint) {
  // Every bundled dimension has one forward and one reverse item.
  const auto pair = testing::bundled_inventories();
  for (int v = 1; v <= 5; ++v) {
    for (const auto* inv : {&pair.hexaco, &pair.csi}) {
      AdministrationRecord r;
      r.persona_id = "p";
      r.inventory_id = inv->id;
      for (const auto& item : inv->items) r.responses[item.id] = v;
      const auto p = score(r, *inv);
      for (auto d : dimensions_of(inv->family)) EXPECT_EQ(p.score(d), 3.0);
    }
  }
}

TEST(AdministrationRecords, RoundTripWithMissing) {
  testing::TempDir dir;
  AdministrationRecord r;
  r.persona_id = "p";
  r.inventory_id = "tiny";
  r.model = "m";
  r.responses = {{"P1", 4}, {"P2", std::nullopt}, {"Q1", 1}};
  save_corpus(std::vector{r}, dir / "a.jsonl");
  EXPECT_NE(testing::read_file(dir / "a.jsonl").find("\"MISSING\""), std::string::npos);
  EXPECT_EQ(load_corpus<AdministrationRecord>(dir / "a.jsonl"), std::vector{r});
}

}  // namespace
}  // namespace pesc::inventory
