#include <gtest/gtest.h>

#include "retrofit_oracle.hpp"
#include "test_support.hpp"

using namespace epcplan;
using namespace epcplan::testing;

namespace {

const Catalog& shipped() {
  static const Catalog c = load_catalog(data_path("catalog.txt"));
  return c;
}

HomeProfile sample_home() { return generate_synthetic(1, 42).rows[0].profile; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::InvalidArgument;
}

const std::string kDoorCatalog = R"(version = t1
[item]
id = door_aluminium
category = door
name = Aluminium door
mutation = door_u=1.7
price_eur = 1099
)";

}  // namespace

TEST(Money, CentsRoundTrip) {
  EXPECT_EQ(cents_from_eur(1099), 109900);
  EXPECT_EQ(cents_from_eur(0.1 + 0.2), 30);
  EXPECT_EQ(cents_from_eur(19.995), 2000);
  EXPECT_EQ(format_eur(109900), "1099");
  EXPECT_EQ(format_eur(150), "1.5");
  EXPECT_EQ(format_eur(105), "1.05");
  EXPECT_EQ(format_eur(0), "0");
}

TEST(Catalog, ShippedCatalogLoads) {
  const auto& c = shipped();
  EXPECT_EQ(c.version(), "2024.1");
  EXPECT_EQ(c.items().size(), 17u);
  const auto* door = c.find("door_aluminium");
  ASSERT_NE(door, nullptr);
  EXPECT_EQ(door->category, ComponentCategory::Door);
  EXPECT_EQ(door->price, 109900);
  EXPECT_EQ(door->grant, 0);
  ASSERT_EQ(door->mutations.size(), 1u);
  EXPECT_EQ(door->mutations[0].feature, "door_u");
  EXPECT_DOUBLE_EQ(door->mutations[0].value, 1.7);
  for (auto cat : kAllCategories) EXPECT_FALSE(c.items_in(cat).empty()) << to_string(cat);
}

TEST(Catalog, ParsesOptionalGrantAndCodeNames) {
  const auto c = parse_catalog(kDoorCatalog + R"(
[item]
id = triple
category = window
mutation = window_u=0.8
mutation = glazing_type=triple
price_eur = 9000.50
grant_eur = 1000
)",
                               default_schema());
  const auto* w = c.find("triple");
  ASSERT_NE(w, nullptr);
  EXPECT_EQ(w->name, "triple");
  EXPECT_EQ(w->price, 900050);
  EXPECT_EQ(w->net(), 800050);
  EXPECT_DOUBLE_EQ(w->mutations[1].value, 2.0);
  EXPECT_EQ(c.find("door_aluminium")->grant, 0);
}

TEST(Catalog, RejectsGrantAbovePrice) {
  try {
    parse_catalog("version = x\n[item]\nid = bad\ncategory = door\nmutation = door_u=1\nprice_eur = 1000\n"
                  "grant_eur = 1200\n",
                  default_schema());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GrantExceedsPrice);
    EXPECT_EQ(e.field(), "bad");
    EXPECT_NE(std::string(e.what()).find("1200"), std::string::npos);
  }
}

TEST(Catalog, ValidationErrors) {
  const auto& s = default_schema();
  EXPECT_EQ(code_of([&] { parse_catalog(kDoorCatalog + kDoorCatalog.substr(kDoorCatalog.find("[item]")), s); }),
            ErrorCode::DuplicateId);
  EXPECT_EQ(code_of([&] {
              parse_catalog("version = x\n[item]\nid = a\ncategory = door\nmutation = door_q=1\nprice_eur = 1\n", s);
            }),
            ErrorCode::UnknownFeature);
  EXPECT_EQ(code_of([&] {
              parse_catalog("version = x\n[item]\nid = a\ncategory = door\nmutation = door_u=9\nprice_eur = 1\n", s);
            }),
            ErrorCode::BadValue);
  EXPECT_EQ(code_of([&] {
              parse_catalog("version = x\n[item]\nid = a\ncategory = door\nmutation = door_u=1\n"
                            "mutation = door_u=2\nprice_eur = 1\n",
                            s);
            }),
            ErrorCode::ConflictingMutations);
  EXPECT_EQ(code_of([&] {
              parse_catalog("version = x\n[item]\nid = a\ncategory = doors\nmutation = door_u=1\nprice_eur = 1\n", s);
            }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { parse_catalog("version = x\n[item]\nid = a\ncategory = door\nprice_eur = 1\n", s); }),
            ErrorCode::InvalidArgument);
}

TEST(Catalog, EmptyFileReportsPosition) {
  try {
    parse_catalog("", default_schema());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_EQ(e.row(), 1u);
    EXPECT_NE(std::string(e.what()).find("line 1, column 1"), std::string::npos);
  }
  try {
    parse_catalog("[item]\nid = a\n", default_schema());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.field(), "version");
  }
}

TEST(ApplyItems, SetsMutatedFeaturesOnly) {
  HomeProfile home = sample_home();
  const auto roof = default_schema().index_of("roof_u");
  home.values[roof] = 2.5;
  const auto* item = shipped().find("roof_rafter_insulation");
  ASSERT_NE(item, nullptr);
  const auto out = apply_items(home, std::vector<RetrofitItem>{*item});
  EXPECT_DOUBLE_EQ(out.values[roof], 1.3);
  for (std::size_t i = 0; i < home.values.size(); ++i)
    if (i != roof) EXPECT_EQ(out.values[i], home.values[i]);
  EXPECT_EQ(apply_items(home, std::vector<RetrofitItem>{}).values, home.values);
}

TEST(ApplyItems, RejectsTwoItemsInOneCategoryAndOverlaps) {
  const auto& c = shipped();
  const auto walls = c.items_in(ComponentCategory::WallInsulation);
  ASSERT_GE(walls.size(), 2u);
  EXPECT_EQ(code_of([&] { apply_items(sample_home(), std::vector<RetrofitItem>{*walls[0], *walls[1]}); }),
            ErrorCode::InvalidArgument);
  RetrofitItem a{"a", ComponentCategory::Door, "a", {{"door_u", default_schema().index_of("door_u"), 1.0}}, 1, 0};
  RetrofitItem b{"b", ComponentCategory::Window, "b", {{"door_u", default_schema().index_of("door_u"), 2.0}}, 1, 0};
  EXPECT_EQ(code_of([&] { apply_items(sample_home(), std::vector<RetrofitItem>{a, b}); }),
            ErrorCode::ConflictingMutations);
}

TEST(ApplyItems, OrderDoesNotMatter) {
  const auto& c = shipped();
  std::vector<RetrofitItem> items = {*c.items_in(ComponentCategory::SolarPanels)[0],
                                     *c.items_in(ComponentCategory::WallInsulation)[1],
                                     *c.items_in(ComponentCategory::Window)[2]};
  const auto fwd = apply_items(sample_home(), items);
  std::reverse(items.begin(), items.end());
  EXPECT_EQ(apply_items(sample_home(), items).values, fwd.values);
}

TEST(Planner, EmptySelectionGivesTheBaseOnly) {
  PlanRequest req;
  req.home = sample_home();
  req.categories = {};
  const auto f = enumerate_plans(req, shipped(), hash_predictor());
  EXPECT_EQ(f.combinations, 1u);
  ASSERT_EQ(f.entries.size(), 1u);
  const auto& [rating, plan] = *f.entries.begin();
  EXPECT_EQ(rating, f.base_rating);
  EXPECT_TRUE(plan.items.empty());
  EXPECT_EQ(plan.net_cost, 0);
}

TEST(Planner, ZeroBudgetKeepsOnlyFreeOrFullyFundedPlans) {
  PlanRequest req;
  req.home = sample_home();
  req.budget = 0;
  const auto f = enumerate_plans(req, shipped(), hash_predictor());
  for (const auto& [r, p] : f.entries) EXPECT_EQ(p.net_cost, 0) << to_string(r);
  EXPECT_EQ(f.entries.size(), brute_force_frontier(req, shipped(), hash_predictor()).size());
}

TEST(Planner, ThreeByThreeByThreeMatchesBruteForce) {
  const auto& s = default_schema();
  std::vector<RetrofitItem> items;
  const std::array<ComponentCategory, 3> cats = {ComponentCategory::WallInsulation, ComponentCategory::Door,
                                                 ComponentCategory::SolarPanels};
  const std::array<Cents, 6> prices = {100000, 250000, 50000, 80000, 400000, 300000};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < 2; ++k) {
      const auto feat = category_feature(cats[c]);
      const auto& d = s[s.index_of(feat)];
      items.push_back({feat + std::to_string(k), cats[c], "", {{feat, 0, d.min + (d.max - d.min) * (0.2 + 0.5 * k)}},
                       prices[2 * c + k], 0});
    }
  const Catalog cat("t", items, s);
  PlanRequest req;
  req.home = sample_home();
  req.categories = {cats.begin(), cats.end()};
  const auto predict = hash_predictor(5);
  const auto f = enumerate_plans(req, cat, predict);
  EXPECT_EQ(f.combinations, 27u);
  EXPECT_EQ(compare_with_oracle(f, brute_force_frontier(req, cat, predict)), "");
  // batch size must not change the result
  const auto tiny = enumerate_plans(req, cat, predict, 1);
  for (const auto& [r, p] : f.entries) EXPECT_EQ(tiny.entries.at(r), p);
}

TEST(Planner, RandomCatalogsMatchBruteForce) {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto cat = random_catalog(rng);
    PlanRequest req;
    req.home = generate_synthetic(1, static_cast<std::uint64_t>(trial)).rows[0].profile;
    req.categories.clear();
    for (const auto& it : cat.items()) req.categories.push_back(it.category);
    req.strict = rng.bernoulli(0.3);
    req.basis = rng.bernoulli(0.5) ? CostBasis::Net : CostBasis::Gross;
    if (rng.bernoulli(0.5)) req.budget = static_cast<Cents>(rng.below(20)) * 50000;
    const auto predict = hash_predictor(1 + rng.below(kRatingCount));
    const auto f = enumerate_plans(req, cat, predict, 1 + rng.below(8));
    EXPECT_EQ(compare_with_oracle(f, brute_force_frontier(req, cat, predict)), "") << "trial " << trial;
  }
}

TEST(Planner, CapErrorCarriesTheProductSize) {
  PlanRequest req;
  req.home = sample_home();
  req.combination_cap = 1000;
  try {
    enumerate_plans(req, shipped(), hash_predictor());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CombinationLimitExceeded);
    EXPECT_NE(std::string(e.what()).find("10368"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("1000"), std::string::npos);
  }
  EXPECT_EQ(combination_count(req, shipped()), 10368u);
  req.strict = true;
  EXPECT_EQ(combination_count(req, shipped()), 3u * 2 * 2 * 3 * 2 * 1 * 1 * 1 * 2);
}

TEST(Planner, EmptyCategoryIsReported) {
  const Catalog c = parse_catalog(kDoorCatalog, default_schema());
  PlanRequest req;
  req.home = sample_home();
  req.categories = {ComponentCategory::Door, ComponentCategory::Mvhr};
  try {
    enumerate_plans(req, c, hash_predictor());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCategory);
    EXPECT_EQ(e.field(), "mvhr");
  }
}

TEST(Planner, StrictModeAlwaysUpgradesEveryCategory) {
  PlanRequest req;
  req.home = sample_home();
  req.categories = {ComponentCategory::Door, ComponentCategory::Window};
  req.strict = true;
  const auto f = enumerate_plans(req, shipped(), hash_predictor());
  for (const auto& [r, p] : f.entries) {
    EXPECT_EQ(p.items.size(), 2u);
    EXPECT_TRUE(p.kept.empty());
  }
}

TEST(Planner, GrossBasisRanksByPriceBeforeGrants) {
  // a: 1000 gross, 1000 net; b: 3000 gross, 500 net. Same rating.
  const auto& s = default_schema();
  const auto idx = s.index_of("door_u");
  std::vector<RetrofitItem> items = {{"a", ComponentCategory::Door, "", {{"door_u", idx, 1.0}}, 100000, 0},
                                     {"b", ComponentCategory::Door, "", {{"door_u", idx, 2.0}}, 300000, 250000}};
  const Catalog c("t", items, s);
  PlanRequest req;
  req.home = sample_home();
  req.categories = {ComponentCategory::Door};
  req.strict = true;
  auto constant = [](std::span<const HomeProfile> ps) { return std::vector<EnergyRating>(ps.size(), EnergyRating::C1); };
  EXPECT_EQ(enumerate_plans(req, c, constant).entries.at(EnergyRating::C1).item_ids(), std::vector<std::string>{"b"});
  req.basis = CostBasis::Gross;
  EXPECT_EQ(enumerate_plans(req, c, constant).entries.at(EnergyRating::C1).item_ids(), std::vector<std::string>{"a"});
  req.budget = 200000;  // gross budget excludes b
  req.basis = CostBasis::Gross;
  EXPECT_EQ(enumerate_plans(req, c, constant).entries.at(EnergyRating::C1).item_ids(), std::vector<std::string>{"a"});
}

TEST(Planner, TiesPreferFewerItemsThenLexicographicIds) {
  RetrofitPlan a, b;
  a.items.resize(1);
  a.items[0].id = "z";
  b.items.resize(2);
  b.items[0].id = "a";
  b.items[1].id = "b";
  EXPECT_TRUE(plan_better(a, b, CostBasis::Net));
  b.items.pop_back();
  EXPECT_TRUE(plan_better(b, a, CostBasis::Net));
  b.net_cost = 1;
  EXPECT_TRUE(plan_better(a, b, CostBasis::Net));
}

TEST(Planner, SupersetOfCategoriesNeverCostsMore) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    PlanRequest small;
    small.home = generate_synthetic(1, 100 + static_cast<std::uint64_t>(trial)).rows[0].profile;
    std::vector<ComponentCategory> all(kAllCategories.begin(), kAllCategories.end());
    rng.shuffle(all);
    small.categories.assign(all.begin(), all.begin() + 2);
    PlanRequest big = small;
    big.categories.assign(all.begin(), all.begin() + 4);
    const auto predict = hash_predictor(6);
    const auto fs = enumerate_plans(small, shipped(), predict);
    const auto fb = enumerate_plans(big, shipped(), predict);
    for (const auto& [r, p] : fs.entries) {
      ASSERT_TRUE(fb.entries.count(r)) << to_string(r);
      EXPECT_LE(fb.entries.at(r).net_cost, p.net_cost);
    }
  }
}

TEST(Planner, RaisingTheBudgetKeepsCheaperEntries) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    PlanRequest lo;
    lo.home = generate_synthetic(1, 200 + static_cast<std::uint64_t>(trial)).rows[0].profile;
    lo.categories = {ComponentCategory::WallInsulation, ComponentCategory::Window, ComponentCategory::SolarPanels,
                     ComponentCategory::Door};
    lo.budget = static_cast<Cents>(rng.below(30)) * 100000;
    PlanRequest hi = lo;
    *hi.budget += static_cast<Cents>(rng.below(30)) * 100000;
    const auto predict = hash_predictor(8);
    const auto fl = enumerate_plans(lo, shipped(), predict);
    const auto fh = enumerate_plans(hi, shipped(), predict);
    EXPECT_LE(fl.entries.size(), fh.entries.size());
    for (const auto& [r, p] : fl.entries) EXPECT_EQ(fh.entries.at(r), p);
  }
}

TEST(FrontierReport, ImprovementCountsRatingSteps) {
  PlanFrontier f;
  f.base_rating = EnergyRating::D1;
  RetrofitPlan b2, c1;
  b2.total_cost = 500000;
  b2.net_cost = 400000;
  b2.total_grant = 100000;
  c1.net_cost = 200000;
  c1.total_cost = 200000;
  f.entries[EnergyRating::C1] = c1;
  f.entries[EnergyRating::B2] = b2;
  const auto rows = frontier_report(f);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].rating, EnergyRating::B2);
  EXPECT_EQ(rows[0].improvement, 5);
  EXPECT_EQ(rows[0].grant, 100000);
  EXPECT_EQ(rows[1].rating, EnergyRating::C1);
  EXPECT_EQ(rows[1].improvement, 3);
  EXPECT_NE(render_frontier(f).find("base rating: D1"), std::string::npos);
}
