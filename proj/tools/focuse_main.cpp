// focuse: train and evaluate knowledge graph embeddings with numeric edge
// attributes.
//
// Exit codes: 0 success, 1 validation error, 2 runtime or numeric failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "focuse/cli.hpp"
#include "focuse/errors.hpp"

namespace {

using focuse::cli::RunConfig;

struct CommonOptions {
  std::optional<std::string> config_file;
  std::optional<std::string> preset;
  std::optional<std::string> dataset_dir;
  std::optional<std::string> train_path, valid_path, test_path;
  std::optional<bool> weighted;
  std::optional<std::string> normalization;
  std::optional<std::string> scorer;
  std::optional<std::size_t> k;
  std::optional<std::uint32_t> eta;
  std::optional<double> learning_rate;
  std::optional<std::uint32_t> epochs;
  std::optional<double> gamma;
  std::optional<std::uint32_t> lambda;
  std::optional<double> constant_beta;
  std::optional<bool> focuse;
  std::optional<std::size_t> batch_size;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> tie_mode;
  std::optional<double> fraction;
  std::optional<std::string> output_dir;
  std::optional<std::uint32_t> checkpoint_interval;
  std::optional<unsigned> threads;

  void attach(CLI::App* app, bool training) {
    app->add_option("-c,--config", config_file, "JSON run configuration");
    app->add_option("--dataset-dir", dataset_dir,
                    "directory holding train.tsv, valid.tsv (or val.tsv) and test.tsv");
    app->add_option("--train", train_path, "training triples (TSV)");
    app->add_option("--valid", valid_path, "validation triples (TSV)");
    app->add_option("--test", test_path, "test triples (TSV)");
    app->add_option("--weighted", weighted, "files carry a fourth weight column (default true)");
    app->add_option("--normalization", normalization, "passthrough | minmax");
    app->add_option("--fraction", fraction, "top/bottom test split fraction (default 0.1)");
    app->add_option("--tie-mode", tie_mode, "worst | paper_footnote");
    app->add_option("-o,--output", output_dir, "output directory");
    app->add_option("--threads", threads, "evaluation worker threads (0 = all cores)");
    if (!training) return;
    app->add_option("--preset", preset, "published hyper-parameters, e.g. ppi5k-complex-focuse");
    app->add_option("--scorer", scorer, "transe-l1 | transe-l2 | distmult | complex");
    app->add_option("-k,--dim", k, "embedding dimensionality");
    app->add_option("--eta", eta, "corruptions per positive");
    app->add_option("--lr", learning_rate, "Adam learning rate");
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--gamma", gamma, "L3 regularization weight");
    app->add_option("--lambda", lambda, "beta decay horizon in epochs (0 = constant beta)");
    app->add_option("--beta", constant_beta, "beta used when lambda is 0");
    app->add_option("--focuse", focuse, "enable the FocusE layer (default true)");
    app->add_option("--batch-size", batch_size, "positives per batch");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--checkpoint-interval", checkpoint_interval,
                    "write a checkpoint every N epochs");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (preset) c = focuse::cli::apply_preset(*preset, c);
    if (config_file) c = focuse::cli::load_config_file(*config_file, c);
    if (dataset_dir) {
      const std::filesystem::path dir(*dataset_dir);
      c.train_path = dir / "train.tsv";
      c.test_path = dir / "test.tsv";
      c.valid_path.clear();
      for (const char* name : {"valid.tsv", "val.tsv", "validation.tsv"}) {
        if (std::filesystem::exists(dir / name)) {
          c.valid_path = dir / name;
          break;
        }
      }
    }
    if (train_path) c.train_path = *train_path;
    if (valid_path) c.valid_path = *valid_path;
    if (test_path) c.test_path = *test_path;
    if (weighted) c.weighted = *weighted;
    if (normalization) c = focuse::cli::from_json({{"normalization", *normalization}}, c);
    if (scorer) c.train.scorer = focuse::parse_scorer(*scorer);
    if (k) c.train.k = *k;
    if (eta) c.train.eta = *eta;
    if (learning_rate) c.train.learning_rate = *learning_rate;
    if (epochs) c.train.epochs = *epochs;
    if (gamma) c.train.gamma = *gamma;
    if (lambda) c.train.lambda = *lambda;
    if (constant_beta) c.train.constant_beta = *constant_beta;
    if (focuse) c.train.focuse = *focuse;
    if (batch_size) c.train.batch_size = *batch_size;
    if (seed) c.train.seed = *seed;
    if (tie_mode) c.tie_mode = focuse::parse_tie_mode(*tie_mode);
    if (fraction) c.fraction = *fraction;
    if (output_dir) c.output_dir = *output_dir;
    if (checkpoint_interval) c.checkpoint_interval = *checkpoint_interval;
    if (threads) c.threads = *threads;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge graph embeddings with numeric edge attributes (FocusE)"};
  app.require_subcommand(1);

  CommonOptions stats_opts, train_opts, eval_opts, compare_opts, export_opts, sweep_opts;
  bool stats_json = false;
  std::string eval_checkpoint, compare_checkpoint, export_checkpoint, export_csv;
  std::vector<std::string> eval_splits{"full", "top", "bottom"};
  std::string sweep_axis = "lambda";
  std::vector<double> sweep_values;
  unsigned sweep_jobs = 1;

  auto* stats = app.add_subcommand("stats", "print dataset statistics");
  stats_opts.attach(stats, false);
  stats->add_flag("--json", stats_json, "print JSON instead of a table");

  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_opts.attach(train_cmd, true);

  auto* eval_cmd = app.add_subcommand("evaluate", "filtered ranking metrics");
  eval_opts.attach(eval_cmd, false);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--splits", eval_splits, "any of full, top, bottom");

  auto* compare_cmd = app.add_subcommand("compare", "top vs bottom split comparison");
  compare_opts.attach(compare_cmd, false);
  compare_cmd->add_option("--checkpoint", compare_checkpoint, "model checkpoint")->required();

  auto* export_cmd = app.add_subcommand("export-scores", "write raw scores of top/bottom splits");
  export_opts.attach(export_cmd, false);
  export_cmd->add_option("--checkpoint", export_checkpoint, "model checkpoint")->required();
  export_cmd->add_option("--csv", export_csv, "output CSV path")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "train + evaluate once per value of one axis");
  sweep_opts.attach(sweep_cmd, true);
  sweep_cmd->add_option("--axis", sweep_axis, "lambda | eta | k | lr | gamma");
  sweep_cmd->add_option("--values", sweep_values, "values to sweep")->required();
  sweep_cmd->add_option("--jobs", sweep_jobs, "concurrent runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (stats->parsed()) {
      auto config = stats_opts.resolve();
      config.validate();
      const auto graph = focuse::cli::load_graph(config);
      for (const auto& w : graph.warnings) std::cerr << "warning: " << w << '\n';
      const auto s = focuse::cli::dataset_stats(graph, config.fraction);
      if (stats_json) {
        std::cout << focuse::cli::to_json(s).dump(2) << '\n';
      } else {
        focuse::cli::print_stats(s, std::cout);
      }
    } else if (train_cmd->parsed()) {
      focuse::cli::cmd_train(train_opts.resolve(), std::cout);
    } else if (eval_cmd->parsed()) {
      focuse::cli::EvaluateRequest request{false, false, false};
      for (const auto& s : eval_splits) {
        if (s == "full") request.full = true;
        else if (s == "top") request.top = true;
        else if (s == "bottom") request.bottom = true;
        else throw focuse::ValidationError("splits: unknown split '" + s + "'");
      }
      const auto j = focuse::cli::cmd_evaluate(eval_opts.resolve(), eval_checkpoint, request,
                                               std::cout);
      std::cout << j.dump(2) << '\n';
    } else if (compare_cmd->parsed()) {
      focuse::cli::cmd_compare(compare_opts.resolve(), compare_checkpoint, std::cout);
    } else if (export_cmd->parsed()) {
      focuse::cli::cmd_export_scores(export_opts.resolve(), export_checkpoint, export_csv,
                                     std::cout);
    } else if (sweep_cmd->parsed()) {
      const auto rows =
          focuse::cli::cmd_sweep(sweep_opts.resolve(), focuse::cli::parse_sweep_axis(sweep_axis),
                                 sweep_values, sweep_jobs, std::cout);
      for (const auto& row : rows) {
        if (!row.top_mrr) return 2;
      }
    }
  } catch (const focuse::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const focuse::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
