#include <gtest/gtest.h>

#include <sstream>

#include "epcplan/experiment.hpp"

using namespace epcplan;

TEST(Experiment, MeanAndSampleStd) {
  const auto m = mean_std({2, 4, 4, 4, 5, 5, 7, 9});
  EXPECT_DOUBLE_EQ(m.mean, 5.0);
  EXPECT_NEAR(m.std, std::sqrt(32.0 / 7.0), 1e-15);
  EXPECT_EQ(mean_std({3.0}).std, 0.0);
  EXPECT_EQ(mean_std({}).count, 0u);
}

TEST(Experiment, ParsesConfigFile) {
  const auto cfg = parse_experiment(
      "models = mlp, gbt\nseeds = 3, 4\ndata = synthetic:500\ndata_seed = 9\nepochs = 7\n"
      "pretrain_epochs = 2\ngbt_rounds = 11\ncleaning = drop_row\n");
  EXPECT_EQ(cfg.models, (std::vector<std::string>{"mlp", "gbt"}));
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{3, 4}));
  EXPECT_EQ(cfg.data, "synthetic:500");
  EXPECT_EQ(cfg.data_seed, 9u);
  EXPECT_EQ(cfg.classifier.train.max_epochs, 7u);
  EXPECT_EQ(cfg.classifier.scarf.pretrain_epochs, 2u);
  EXPECT_EQ(cfg.gbt.n_rounds, 11u);
  EXPECT_EQ(cfg.cleaning, CleaningPolicy::DropRow);
  EXPECT_THROW(parse_experiment("models = svm\n"), Error);
  EXPECT_THROW(parse_experiment("seeds = 1\n"), Error);
  EXPECT_THROW(parse_experiment("models = mlp\nepochs = many\n"), Error);
}

TEST(Experiment, ShippedSampleConfigNamesAllModels) {
  std::ifstream in(std::string(EPCPLAN_DATA_DIR) + "/../samples/experiment.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto cfg = parse_experiment(ss.str());
  EXPECT_EQ(cfg.models.size(), known_models().size());
  EXPECT_EQ(cfg.seeds.size(), 5u);
}

TEST(Experiment, LeakageIsRefused) {
  auto s = split(generate_synthetic(100, 1), 1);
  EXPECT_NO_THROW(check_no_leakage(s));
  s.test.rows.push_back(s.train.rows.front());
  EXPECT_THROW(check_no_leakage(s), Error);
}

TEST(Experiment, TrialsProduceOneRowPerModelAndSeed) {
  ExperimentConfig cfg;
  cfg.models = {"decision_tree", "gbt"};
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.gbt.n_rounds = 3;
  cfg.tree.max_depth = 6;
  const auto data = load_experiment_data("synthetic:1500", 1, cfg.cleaning);
  const auto reports = run_trials(cfg, data);
  ASSERT_EQ(reports.size(), 2u);
  for (const auto& r : reports) {
    ASSERT_EQ(r.runs.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.runs[i].seed, i + 1);
  }
  // resplitting per seed gives different test sets
  EXPECT_NE(reports[0].runs[0].metrics.accuracy, reports[0].runs[1].metrics.accuracy);

  const auto trials = render_trials_csv(reports);
  EXPECT_EQ(std::count(trials.begin(), trials.end(), '\n'), 11);
  const auto t2 = render_table2_csv(reports);
  EXPECT_EQ(t2.substr(0, t2.find('\n')), "model,macro_f1_mean,macro_f1_std,accuracy_mean,accuracy_std,seeds");
  // table means recomputed from the per-seed rows
  std::istringstream rows(trials);
  std::string line;
  std::getline(rows, line);
  std::vector<double> acc;
  while (std::getline(rows, line))
    if (line.rfind("gbt,", 0) == 0) {
      std::vector<std::string> cells;
      std::stringstream ls(line);
      for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
      acc.push_back(std::stod(cells[2]));
    }
  ASSERT_EQ(acc.size(), 5u);
  double mean = 0;
  for (double a : acc) mean += a / 5;
  EXPECT_NEAR(mean, reports[1].accuracy().mean, 1e-15);
  EXPECT_NE(t2.find("gbt," + fixed(reports[1].macro_f1().mean)), std::string::npos);
  EXPECT_NE(render_tables_text(reports).find("decision_tree"), std::string::npos);
}

TEST(Experiment, Table3MarksAbsentClasses) {
  TrialReport r{"m", {}};
  SeedResult s;
  s.seed = 1;
  s.metrics.per_class_accuracy[index_of(EnergyRating::A2)] = 0.5;
  r.runs.push_back(s);
  s.metrics.per_class_accuracy[index_of(EnergyRating::A2)] = 1.0;
  r.runs.push_back(s);
  const auto csv = render_table3_csv({r});
  EXPECT_NE(csv.find("m,n/a,0.750000,n/a,0,2,0"), std::string::npos) << csv;
}

TEST(Experiment, ErrorsNameTheModelAndSeed) {
  ExperimentConfig cfg;
  cfg.models = {"c2f_mlp"};
  cfg.seeds = {4};
  auto data = generate_synthetic(300, 1);
  std::erase_if(data.rows, [](const LabeledRow& r) { return to_coarse(r.rating) == CoarseRating::A; });
  try {
    run_trials(cfg, data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("model c2f_mlp, seed 4"), std::string::npos) << e.what();
  }
}
