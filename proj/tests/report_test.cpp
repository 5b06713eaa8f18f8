#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "epcplan/report.hpp"
#include "epcplan/synthetic.hpp"
#include "test_support.hpp"

using namespace epcplan;
using namespace epcplan::testing;

namespace {

const Catalog& shipped() {
  static const Catalog c = load_catalog(data_path("catalog.txt"));
  return c;
}

RetrofitPlan plan_of(std::vector<std::string> ids, EnergyRating r) {
  RetrofitPlan p;
  p.predicted_rating = r;
  for (const auto& id : ids) {
    p.items.push_back(*shipped().find(id));
    p.total_cost += p.items.back().price;
    p.total_grant += p.items.back().grant;
  }
  p.net_cost = p.total_cost - p.total_grant;
  return p;
}

QuestionDb toy_db() {
  return QuestionDb({{"Heat pump cost?", {"pump a", "pump b"}},
                     {"Heat loss windows", {"win a"}},
                     {"solar COST", {"solar a", "solar b"}}});
}

}  // namespace

TEST(PlanText, DoorPlanCarriesValueUnitAndPrice) {
  const auto doc = plan_to_text(plan_of({"door_aluminium"}, EnergyRating::D1), default_schema());
  EXPECT_NE(doc.text.find("door_u: 1.7 W/m2K" + std::string(kContextSeparator)), std::string::npos) << doc.text;
  EXPECT_NE(doc.text.find("1099"), std::string::npos);
  EXPECT_NE(doc.text.find("item.door: door_aluminium"), std::string::npos);
  EXPECT_EQ(doc.text.rfind("rating: D1 —", 0), 0u);
}

TEST(PlanText, EmptyPlanHasRatingAndZeroNetCostOnly) {
  const auto doc = plan_to_text(plan_of({}, EnergyRating::E2), default_schema());
  const auto kv = parse_plan_text(doc.text);
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], std::make_pair(std::string("rating"), std::string("E2")));
  EXPECT_EQ(kv[1], std::make_pair(std::string("net_cost_eur"), std::string("0")));
}

TEST(PlanText, DeterministicAndIdTracksContent) {
  const auto a = plan_to_text(plan_of({"door_aluminium", "wall_cavity_fill"}, EnergyRating::C2), default_schema());
  const auto b = plan_to_text(plan_of({"wall_cavity_fill", "door_aluminium"}, EnergyRating::C2), default_schema());
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.plan_id, b.plan_id);
  EXPECT_EQ(a.plan_id.size(), 12u);
  const auto c = plan_to_text(plan_of({"door_aluminium", "wall_cavity_fill"}, EnergyRating::C3), default_schema());
  EXPECT_NE(a.plan_id, c.plan_id);
  // items follow schema order: wall_u precedes door_u
  EXPECT_LT(a.text.find("wall_u:"), a.text.find("door_u:"));
}

TEST(PlanText, ParsesBackToTheStructuredFormWithUniqueKeys) {
  Rng rng(3);
  const auto& items = shipped().items();
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> ids;
    std::set<ComponentCategory> used;
    for (const auto& it : items)
      if (rng.bernoulli(0.4) && used.insert(it.category).second) ids.push_back(it.id);
    const auto doc = plan_to_text(plan_of(ids, rating_from_index(rng.below(15))), default_schema());
    EXPECT_EQ(parse_plan_text(doc.text), doc.structured);
    std::set<std::string> keys;
    for (const auto& [k, v] : doc.structured) EXPECT_TRUE(keys.insert(k).second) << k;
    std::size_t newlines = 0;
    for (char ch : doc.text) newlines += ch == '\n';
    EXPECT_EQ(newlines, doc.structured.size());
  }
}

TEST(PlanText, CategoricalValuesUseCodeNames) {
  const auto doc = plan_to_text(plan_of({"window_triple"}, EnergyRating::C1), default_schema());
  EXPECT_NE(doc.text.find("glazing_type: triple —"), std::string::npos) << doc.text;
}

TEST(PlanText, MissingTemplateIsReported) {
  auto t = default_context_templates();
  t.erase("door_u");
  try {
    plan_to_text(plan_of({"door_aluminium"}, EnergyRating::D1), default_schema(), t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingTemplate);
    EXPECT_EQ(e.field(), "door_u");
  }
  EXPECT_THROW(check_templates(t, default_schema()), Error);
  EXPECT_NO_THROW(check_templates(default_context_templates(), default_schema()));
}

TEST(PlanText, MalformedLineIsAParseError) {
  EXPECT_THROW(parse_plan_text("rating D1\n"), Error);
}

TEST(PlanText, TemplateFileParses) {
  const auto t = parse_context_templates("[template]\nfeature = door_u\ncontext = front door\n");
  EXPECT_EQ(t.at("door_u"), "front door");
}

TEST(Followups, TokenizerLowercasesAlphanumericRuns) {
  EXPECT_EQ(tokenize("  Heat-PUMP, cost?\t2024 "), (std::vector<std::string>{"heat", "pump", "cost", "2024"}));
}

TEST(Followups, HandComputedTfIdf) {
  const auto db = toy_db();
  const double common = std::log(4.0 / 3.0) + 1.0;  // df 2 of 3
  const double rare = std::log(2.0) + 1.0;           // df 1 of 3
  EXPECT_NEAR(*db.idf("heat"), common, 1e-15);
  EXPECT_NEAR(*db.idf("pump"), rare, 1e-15);
  EXPECT_FALSE(db.idf("nothing"));
  EXPECT_EQ(db.vocabulary_size(), 6u);

  const auto r = suggest_followups("heat cost", db, 4);
  const double s0 = std::sqrt(2.0) * common / std::sqrt(2 * common * common + rare * rare);
  const double s1 = (common / std::sqrt(2.0)) / std::sqrt(common * common + 2 * rare * rare);
  const double s2 = (common / std::sqrt(2.0)) / std::sqrt(common * common + rare * rare);
  ASSERT_EQ(r.ranking.size(), 3u);
  EXPECT_EQ(r.ranking[0].index, 0u);
  EXPECT_NEAR(r.ranking[0].score, s0, 1e-12);
  EXPECT_EQ(r.ranking[1].index, 2u);
  EXPECT_NEAR(r.ranking[1].score, s2, 1e-12);
  EXPECT_EQ(r.ranking[2].index, 1u);
  EXPECT_NEAR(r.ranking[2].score, s1, 1e-12);
  ASSERT_EQ(r.suggestions.size(), 4u);
  EXPECT_EQ(r.suggestions[0].text, "pump a");
  EXPECT_EQ(r.suggestions[1].text, "pump b");
  EXPECT_EQ(r.suggestions[2].text, "solar a");
  EXPECT_NEAR(r.suggestions[2].score, s2, 1e-12);
  EXPECT_FALSE(r.low_confidence);
}

TEST(Followups, ExactQuestionScoresOne) {
  const auto db = load_question_db(data_path("questions.txt"));
  for (std::size_t i = 0; i < db.size(); ++i) {
    const auto r = suggest_followups(db.entries()[i].question, db, 3);
    EXPECT_EQ(r.ranking[0].index, i);
    EXPECT_NEAR(r.ranking[0].score, 1.0, 1e-12);
    EXPECT_EQ(r.suggestions.size(), 3u);
    EXPECT_EQ(r.suggestions[0].text, db.entries()[i].follow_ups[0]);
  }
}

TEST(Followups, DisjointQueryIsLowConfidence) {
  const auto db = load_question_db(data_path("questions.txt"));
  const auto r = suggest_followups("zzz qqq", db, 3);
  EXPECT_TRUE(r.low_confidence);
  EXPECT_TRUE(r.suggestions.empty());
  EXPECT_EQ(r.ranking[0].score, 0.0);
}

TEST(Followups, CaseWhitespaceAndOrderInvariant) {
  const auto db = load_question_db(data_path("questions.txt"));
  const auto a = suggest_followups("how much does wall insulation cost", db, 5);
  const auto b = suggest_followups("  COST   wall\tinsulation does much HOW ", db, 5);
  ASSERT_EQ(a.suggestions.size(), b.suggestions.size());
  for (std::size_t i = 0; i < a.suggestions.size(); ++i) {
    EXPECT_EQ(a.suggestions[i].text, b.suggestions[i].text);
    EXPECT_DOUBLE_EQ(a.suggestions[i].score, b.suggestions[i].score);
  }
}

TEST(Followups, ScoresAreBoundedAndSorted) {
  const auto db = load_question_db(data_path("questions.txt"));
  Rng rng(9);
  const auto vocab = tokenize(db.entries()[0].question + " " + db.entries()[3].question + " grant heat pump");
  for (int t = 0; t < 50; ++t) {
    std::string q;
    for (std::uint64_t w = 0; w < 1 + rng.below(8); ++w) q += vocab[rng.below(vocab.size())] + " ";
    const auto r = suggest_followups(q, db, 1 + rng.below(10));
    for (std::size_t i = 0; i < r.ranking.size(); ++i) {
      EXPECT_GE(r.ranking[i].score, 0.0);
      EXPECT_LE(r.ranking[i].score, 1.0);
      if (i) EXPECT_GE(r.ranking[i - 1].score, r.ranking[i].score);
    }
    std::set<std::string> seen;
    for (const auto& s : r.suggestions) EXPECT_TRUE(seen.insert(s.text).second);
  }
}

TEST(Followups, RejectsNonPositiveK) {
  EXPECT_THROW(suggest_followups("x", toy_db(), 0), Error);
  EXPECT_THROW(parse_question_db("# nothing\n"), Error);
}
