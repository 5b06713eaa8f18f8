// Command-line workflows: synth, train, evaluate, tables, importance, plan, serve.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epcplan/checkpoint.hpp"
#include "epcplan/experiment.hpp"
#include "epcplan/report.hpp"
#include "epcplan/retrofit.hpp"
#include "epcplan/service.hpp"
#include "epcplan/synthetic.hpp"
#include "epcplan/trees.hpp"

namespace fs = std::filesystem;
using namespace epcplan;

namespace {

struct ModelFlags {
  std::size_t epochs = 60;
  std::size_t patience = 10;
  std::size_t pretrain_epochs = 20;
  std::size_t hidden_width = 256;
  std::size_t batch_size = 512;
  double learning_rate = 1e-3;
  std::size_t forest_trees = 100;
  std::size_t gbt_rounds = 200;
  std::string cleaning = "impute_median";

  void add(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "Maximum supervised epochs")->capture_default_str();
    cmd->add_option("--patience", patience, "Early-stopping patience in epochs")->capture_default_str();
    cmd->add_option("--pretrain-epochs", pretrain_epochs, "Contrastive pre-training epochs")->capture_default_str();
    cmd->add_option("--hidden-width", hidden_width, "Hidden layer width")->capture_default_str();
    cmd->add_option("--batch-size", batch_size, "Mini-batch size")->capture_default_str();
    cmd->add_option("--lr", learning_rate, "Adam learning rate")->capture_default_str();
    cmd->add_option("--forest-trees", forest_trees, "Random forest size")->capture_default_str();
    cmd->add_option("--gbt-rounds", gbt_rounds, "Boosting rounds")->capture_default_str();
    cmd->add_option("--cleaning", cleaning, "impute_median or drop_row")
        ->check(CLI::IsMember({"impute_median", "drop_row"}))
        ->capture_default_str();
  }

  void apply(ExperimentConfig& cfg) const {
    cfg.classifier.train.max_epochs = epochs;
    cfg.classifier.train.early_stop_patience = patience;
    cfg.classifier.train.learning_rate = learning_rate;
    cfg.classifier.train.batch_size = batch_size;
    cfg.classifier.scarf.pretrain_epochs = pretrain_epochs;
    cfg.classifier.network.hidden_width = hidden_width;
    cfg.forest.n_trees = forest_trees;
    cfg.gbt.n_rounds = gbt_rounds;
    cfg.cleaning = cleaning == "drop_row" ? CleaningPolicy::DropRow : CleaningPolicy::ImputeMedian;
  }
};

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

const std::string kDataDir = env_or("EPCPLAN_DATA_DIR", "data");

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write file", path.string());
  out << text;
}

std::string model_version(const std::string& checkpoint_path) {
  return content_id(read_text_file(checkpoint_path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-rating classifiers and retrofit planning"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic labelled dataset (CSV)");
  std::size_t synth_n = 20000;
  std::uint64_t synth_seed = 1;
  double zero_rate = 0.0;
  std::string synth_out = "synthetic.csv";
  synth->add_option("--n", synth_n, "Row count")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("--zero-rate", zero_rate, "Share of rows with floor area and floor U recorded as 0")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--out,-o", synth_out, "Output CSV")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train one model and write a checkpoint");
  std::string train_data = "synthetic.csv", train_model = "mlp", train_out = "model.llem";
  std::uint64_t train_seed = 1;
  ModelFlags train_flags;
  train->add_option("--data", train_data, "Dataset CSV or synthetic:<n>")->capture_default_str();
  train->add_option("--model", train_model, "Model name")->check(CLI::IsMember(known_models()))->capture_default_str();
  train->add_option("--seed", train_seed, "Split and initialization seed")->capture_default_str();
  train->add_option("--out,-o", train_out, "Checkpoint path")->capture_default_str();
  train_flags.add(train);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on its test split");
  std::string eval_ckpt = "model.llem", eval_data;
  std::optional<std::uint64_t> eval_seed;
  eval->add_option("--checkpoint,-c", eval_ckpt, "Checkpoint path")->capture_default_str();
  eval->add_option("--data", eval_data, "Dataset (default: the one recorded in the checkpoint)");
  eval->add_option("--seed", eval_seed, "Split seed (default: the training seed)");

  // tables
  auto* tables = app.add_subcommand("tables", "Run seeded trials and write comparison tables");
  std::string tables_models = "decision_tree,gbt,random_forest,mlp,scarf,c2f_mlp,c2f_scarf";
  std::string tables_config, tables_data = "synthetic:20000", tables_out = "tables";
  std::size_t tables_seeds = 5;
  std::uint64_t tables_data_seed = 1;
  ModelFlags tables_flags;
  tables->add_option("--models", tables_models, "Comma-separated model names")->capture_default_str();
  tables->add_option("--seeds", tables_seeds, "Number of seeds (1..n)")->capture_default_str();
  tables->add_option("--data", tables_data, "Dataset CSV or synthetic:<n>")->capture_default_str();
  tables->add_option("--data-seed", tables_data_seed, "Seed of a synthetic dataset")->capture_default_str();
  tables->add_option("--config", tables_config, "Experiment file (overrides the flags above)");
  tables->add_option("--out-dir,-o", tables_out, "Output directory")->capture_default_str();
  tables_flags.add(tables);

  // importance
  auto* imp = app.add_subcommand("importance", "Decision-tree feature importance (CSV)");
  std::string imp_data = "synthetic.csv", imp_out;
  std::uint64_t imp_seed = 1;
  std::size_t imp_depth = 12;
  imp->add_option("--data", imp_data, "Dataset CSV or synthetic:<n>")->capture_default_str();
  imp->add_option("--seed", imp_seed, "Split seed")->capture_default_str();
  imp->add_option("--max-depth", imp_depth, "Tree depth")->capture_default_str();
  imp->add_option("--out,-o", imp_out, "Output CSV (default: stdout)");

  // plan
  auto* plan = app.add_subcommand("plan", "Cheapest retrofit plan per reachable rating");
  std::string plan_ckpt = env_or("EPCPLAN_CHECKPOINT", "model.llem");
  std::string plan_catalog = env_or("EPCPLAN_CATALOG", kDataDir + "/catalog.txt");
  std::string plan_profile, plan_categories = "all";
  std::optional<double> plan_budget;
  std::size_t plan_cap = 1'000'000;
  bool plan_strict = false, plan_gross = false, plan_reports = false;
  plan->add_option("--checkpoint,-c", plan_ckpt, "Checkpoint path")->capture_default_str();
  plan->add_option("--catalog", plan_catalog, "Catalog file")->capture_default_str();
  plan->add_option("--profile,-p", plan_profile, "Home profile JSON")->required();
  plan->add_option("--budget", plan_budget, "Budget in EUR (default: unlimited)")->check(CLI::NonNegativeNumber);
  plan->add_option("--categories", plan_categories, "Comma-separated categories, 'all' or ''")->capture_default_str();
  plan->add_option("--cap", plan_cap, "Combination cap")->capture_default_str();
  plan->add_flag("--strict", plan_strict, "One item in every selected category");
  plan->add_flag("--gross", plan_gross, "Rank and budget on cost before grants");
  plan->add_flag("--reports", plan_reports, "Print the text report of every plan");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP API over a checkpoint and catalog");
  std::string serve_ckpt = env_or("EPCPLAN_CHECKPOINT", "model.llem");
  std::string serve_catalog = env_or("EPCPLAN_CATALOG", kDataDir + "/catalog.txt");
  std::string serve_questions = env_or("EPCPLAN_QUESTIONS", kDataDir + "/questions.txt");
  std::string serve_host = env_or("EPCPLAN_HOST", "127.0.0.1");
  int serve_port = std::atoi(env_or("EPCPLAN_PORT", "8080").c_str());
  std::size_t serve_cap = 1'000'000;
  serve->add_option("--checkpoint,-c", serve_ckpt, "Checkpoint path (env EPCPLAN_CHECKPOINT)")->capture_default_str();
  serve->add_option("--catalog", serve_catalog, "Catalog file (env EPCPLAN_CATALOG)")->capture_default_str();
  serve->add_option("--questions", serve_questions, "Follow-up question file (env EPCPLAN_QUESTIONS)")
      ->capture_default_str();
  serve->add_option("--host", serve_host, "Bind address (env EPCPLAN_HOST)")->capture_default_str();
  serve->add_option("--port", serve_port, "Port (env EPCPLAN_PORT)")->capture_default_str();
  serve->add_option("--cap", serve_cap, "Combination cap")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto& schema = default_schema();

    if (*synth) {
      SyntheticParams params;
      params.zero_anomaly_rate = zero_rate;
      const auto data = generate_synthetic(synth_n, synth_seed, schema, params);
      save_dataset(synth_out, data);
      std::cout << "wrote " << data.size() << " rows to " << synth_out << "\n";
    }

    if (*train) {
      ExperimentConfig cfg;
      cfg.models = {train_model};
      train_flags.apply(cfg);
      const auto data = load_experiment_data(train_data, 1, cfg.cleaning, schema);
      auto prepared = prepare(split(data, train_seed));
      const auto model = train_named_model(train_model, prepared, cfg, train_seed);
      const Metadata meta = {{"model", train_model},
                             {"seed", std::to_string(train_seed)},
                             {"data", train_data},
                             {"cleaning", train_flags.cleaning}};
      save_model(train_out, *model, meta);
      const auto m = evaluate(*model, prepared.splits.validation);
      std::cout << "model: " << train_model << "\ncheckpoint: " << train_out
                << "\nvalidation_accuracy: " << m.accuracy << "\nvalidation_macro_f1: " << m.macro_f1 << "\n";
    }

    if (*eval) {
      const auto loaded = load_model(eval_ckpt, schema);
      const auto& meta = loaded.metadata;
      auto meta_or = [&](const std::string& k, std::string d) {
        auto it = meta.find(k);
        return it == meta.end() ? d : it->second;
      };
      const std::string data_path = eval_data.empty() ? meta_or("data", "synthetic.csv") : eval_data;
      const std::uint64_t seed = eval_seed ? *eval_seed : std::stoull(meta_or("seed", "1"));
      const auto policy =
          meta_or("cleaning", "impute_median") == "drop_row" ? CleaningPolicy::DropRow : CleaningPolicy::ImputeMedian;
      const auto data = load_experiment_data(data_path, 1, policy, schema);
      const auto splits = split(data, seed);
      const auto m = evaluate(*loaded.model, splits.test);
      std::cout << "model: " << loaded.model->kind() << "\nn_test: " << m.n_test << "\naccuracy: " << m.accuracy
                << "\nmacro_f1: " << m.macro_f1 << "\n";
      for (std::size_t k = 0; k < kRatingCount; ++k) {
        std::cout << "accuracy." << to_string(rating_from_index(k)) << ": ";
        if (m.per_class_accuracy[k]) std::cout << *m.per_class_accuracy[k] << "\n";
        else std::cout << "n/a\n";
      }
    }

    if (*tables) {
      ExperimentConfig cfg;
      if (!tables_config.empty()) {
        cfg = parse_experiment(read_text_file(tables_config));
      } else {
        cfg.models = split_list(tables_models);
        cfg.seeds.clear();
        for (std::uint64_t s = 1; s <= tables_seeds; ++s) cfg.seeds.push_back(s);
        cfg.data = tables_data;
        cfg.data_seed = tables_data_seed;
        tables_flags.apply(cfg);
      }
      const auto data = load_experiment_data(cfg.data, cfg.data_seed, cfg.cleaning, schema);
      const auto reports = run_trials(cfg, data);
      const fs::path dir(tables_out);
      write_text(dir / "table2.csv", render_table2_csv(reports));
      write_text(dir / "table3.csv", render_table3_csv(reports));
      write_text(dir / "trials.csv", render_trials_csv(reports));
      const auto text = render_tables_text(reports);
      write_text(dir / "tables.txt", text);
      std::cout << text;
    }

    if (*imp) {
      const auto data = load_experiment_data(imp_data, 1, CleaningPolicy::ImputeMedian, schema);
      const auto prepared = prepare(split(data, imp_seed));
      trees::TreeParams params;
      params.max_depth = imp_depth;
      const auto tree = trees::fit_decision_tree(prepared.splits.train, prepared.encoder, params);
      const auto csv = trees::feature_importance(*tree).to_csv();
      if (imp_out.empty()) std::cout << csv;
      else write_text(imp_out, csv);
    }

    if (*plan) {
      const auto loaded = load_model(plan_ckpt, schema);
      const auto catalog = load_catalog(plan_catalog, schema);
      PlanRequest req;
      req.home = parse_profile_json(Json::parse(read_text_file(plan_profile)), schema);
      if (plan_categories != "all") {
        req.categories.clear();
        for (const auto& name : split_list(plan_categories)) {
          const auto c = parse_category(name);
          if (!c) throw Error(ErrorCode::InvalidArgument, "unknown category '" + name + "'", "categories");
          req.categories.push_back(*c);
        }
      }
      if (plan_budget) req.budget = cents_from_eur(*plan_budget);
      req.combination_cap = plan_cap;
      req.strict = plan_strict;
      req.basis = plan_gross ? CostBasis::Gross : CostBasis::Net;
      const auto frontier = enumerate_plans(req, catalog, *loaded.model);
      std::cout << render_frontier(frontier);
      if (plan_reports)
        for (const auto& [rating, p] : frontier.entries) {
          const auto doc = plan_to_text(p, schema);
          std::cout << "\nplan " << doc.plan_id << "\n" << doc.text;
        }
    }

    if (*serve) {
      auto snap = std::make_shared<Snapshot>();
      snap->model = load_model(serve_ckpt, schema).model;
      snap->model_version = model_version(serve_ckpt);
      snap->catalog = load_catalog(serve_catalog, schema);
      snap->questions = load_question_db(serve_questions);
      ServiceConfig config;
      config.host = serve_host;
      config.port = serve_port;
      config.combination_cap = serve_cap;
      Service service(snap, config);
      httplib::Server server;
      service.install(server);
      std::cerr << "listening on " << serve_host << ":" << serve_port << "\n";
      if (!server.listen(serve_host, serve_port))
        throw Error(ErrorCode::InvalidArgument, "cannot bind " + serve_host + ":" + std::to_string(serve_port), "port");
    }
  } catch (const Error& e) {
    std::cerr << error_json(to_string(e.code()), e.field(), e.detail()).dump() << "\n";
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << error_json("ParseError", "", e.what()).dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << error_json("Internal", "", e.what()).dump() << "\n";
    return 3;
  }
  return 0;
}
