#include "focuse/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>

#include "focuse/errors.hpp"

namespace focuse::cli {

namespace {

std::string_view to_string(WeightNormalization mode) {
  return mode == WeightNormalization::kMinMax ? "minmax" : "passthrough";
}

WeightNormalization parse_normalization(std::string_view name) {
  if (name == "passthrough") return WeightNormalization::kPassthrough;
  if (name == "minmax") return WeightNormalization::kMinMax;
  throw ValidationError("normalization: unknown mode '" + std::string(name) + "'");
}

std::string format_value(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

// Published per-dataset settings: plain model (k, lr, eta, gamma) and its
// FocusE counterpart (k, lr, eta, gamma, lambda).
struct PresetRow {
  const char* dataset;
  const char* model;
  std::size_t plain_k;
  double plain_lr;
  std::uint32_t plain_eta;
  double plain_gamma;
  std::size_t focuse_k;
  double focuse_lr;
  std::uint32_t focuse_eta;
  double focuse_gamma;
  std::uint32_t lambda;
};

constexpr PresetRow kPresets[] = {
    {"onet20k", "transe", 400, 1e-3, 30, 1e-3, 400, 1e-3, 30, 1e-3, 800},
    {"onet20k", "distmult", 400, 1e-3, 30, 1e-3, 400, 1e-3, 30, 1e-3, 800},
    {"onet20k", "complex", 400, 5e-5, 30, 1e-3, 400, 1e-3, 30, 1e-3, 500},
    {"cn15k", "transe", 400, 1e-5, 30, 1e-3, 250, 1e-3, 30, 1e-2, 800},
    {"cn15k", "distmult", 400, 1e-4, 30, 1e-3, 400, 1e-4, 30, 1e-3, 800},
    {"cn15k", "complex", 400, 1e-4, 30, 1e-3, 800, 1e-3, 30, 1e-2, 300},
    {"nl27k", "transe", 200, 5e-5, 30, 1e-3, 200, 1e-3, 30, 1e-2, 800},
    {"nl27k", "distmult", 400, 1e-4, 30, 1e-3, 500, 1e-3, 30, 1e-3, 200},
    {"nl27k", "complex", 400, 1e-4, 30, 1e-3, 400, 1e-4, 30, 1e-3, 800},
    {"ppi5k", "transe", 600, 1e-4, 30, 1e-2, 150, 1e-3, 30, 1e-1, 800},
    {"ppi5k", "distmult", 400, 1e-4, 30, 1e-2, 400, 5e-4, 30, 1e-3, 200},
    {"ppi5k", "complex", 400, 1e-4, 30, 1e-2, 400, 1e-4, 30, 1e-3, 500},
};

void write_loss_csv(const std::vector<EpochStats>& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,beta,mean_loss\n" << std::setprecision(17);
  for (const auto& e : trace) out << e.epoch << ',' << e.beta << ',' << e.mean_loss << '\n';
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

EmbeddingTable load_matching_checkpoint(const std::filesystem::path& path,
                                        const KnowledgeGraph& graph) {
  auto emb = load_checkpoint(path);
  if (emb.num_entities() != graph.num_entities() ||
      emb.num_relations() != graph.num_relations()) {
    throw ValidationError("checkpoint " + path.string() + " has " +
                          std::to_string(emb.num_entities()) + " entities and " +
                          std::to_string(emb.num_relations()) + " relations, dataset has " +
                          std::to_string(graph.num_entities()) + " and " +
                          std::to_string(graph.num_relations()));
  }
  return emb;
}

}  // namespace

void RunConfig::validate() const {
  auto require_file = [](const std::filesystem::path& p, const char* field) {
    if (p.empty()) throw ValidationError(std::string(field) + ": path is required");
    if (!std::filesystem::is_regular_file(p)) {
      throw ValidationError(std::string(field) + ": no such file '" + p.string() + "'");
    }
  };
  require_file(train_path, "train_path");
  if (!valid_path.empty()) require_file(valid_path, "valid_path");
  require_file(test_path, "test_path");
  train.validate();
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("fraction: must lie in (0, 1]");
  }
  if (output_dir.empty()) throw ValidationError("output_dir: must not be empty");
}

nlohmann::json to_json(const RunConfig& c) {
  return {
      {"train_path", c.train_path.string()},
      {"valid_path", c.valid_path.string()},
      {"test_path", c.test_path.string()},
      {"weighted", c.weighted},
      {"normalization", std::string(to_string(c.normalization))},
      {"scorer", std::string(focuse::to_string(c.train.scorer))},
      {"k", c.train.k},
      {"eta", c.train.eta},
      {"learning_rate", c.train.learning_rate},
      {"epochs", c.train.epochs},
      {"gamma", c.train.gamma},
      {"lambda", c.train.lambda},
      {"constant_beta", c.train.constant_beta},
      {"focuse", c.train.focuse},
      {"batch_size", c.train.batch_size},
      {"seed", c.train.seed},
      {"tie_mode", std::string(focuse::to_string(c.tie_mode))},
      {"fraction", c.fraction},
      {"output_dir", c.output_dir.string()},
      {"checkpoint_interval", c.checkpoint_interval},
      {"threads", c.threads},
  };
}

RunConfig from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw ValidationError("config: expected a flat JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "train_path") c.train_path = value.get<std::string>();
      else if (key == "valid_path") c.valid_path = value.get<std::string>();
      else if (key == "test_path") c.test_path = value.get<std::string>();
      else if (key == "weighted") c.weighted = value.get<bool>();
      else if (key == "normalization") c.normalization = parse_normalization(value.get<std::string>());
      else if (key == "scorer") c.train.scorer = parse_scorer(value.get<std::string>());
      else if (key == "k") c.train.k = value.get<std::size_t>();
      else if (key == "eta") c.train.eta = value.get<std::uint32_t>();
      else if (key == "learning_rate") c.train.learning_rate = value.get<double>();
      else if (key == "epochs") c.train.epochs = value.get<std::uint32_t>();
      else if (key == "gamma") c.train.gamma = value.get<double>();
      else if (key == "lambda") c.train.lambda = value.get<std::uint32_t>();
      else if (key == "constant_beta") c.train.constant_beta = value.get<double>();
      else if (key == "focuse") c.train.focuse = value.get<bool>();
      else if (key == "batch_size") c.train.batch_size = value.get<std::size_t>();
      else if (key == "seed") c.train.seed = value.get<std::uint64_t>();
      else if (key == "tie_mode") c.tie_mode = parse_tie_mode(value.get<std::string>());
      else if (key == "fraction") c.fraction = value.get<double>();
      else if (key == "output_dir") c.output_dir = value.get<std::string>();
      else if (key == "checkpoint_interval") c.checkpoint_interval = value.get<std::uint32_t>();
      else if (key == "threads") c.threads = value.get<unsigned>();
      else throw ValidationError(key + ": unknown config key");
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(key + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config: " + path.string() + ": " + e.what());
  }
  return from_json(j, std::move(base));
}

void write_config_snapshot(const RunConfig& config, const std::filesystem::path& path) {
  write_json(to_json(config), path);
}

RunConfig apply_preset(std::string_view name, RunConfig c) {
  for (const auto& row : kPresets) {
    const std::string plain = std::string(row.dataset) + "-" + row.model;
    const bool is_plain = name == plain;
    if (!is_plain && name != plain + "-focuse") continue;

    c.train.scorer = parse_scorer(row.model);
    c.train.lambda = 0;
    c.train.constant_beta = 1.0;
    c.train.epochs = row.lambda;
    if (is_plain) {
      c.train.focuse = false;
      c.train.k = row.plain_k;
      c.train.learning_rate = row.plain_lr;
      c.train.eta = row.plain_eta;
      c.train.gamma = row.plain_gamma;
    } else {
      c.train.focuse = true;
      c.train.k = row.focuse_k;
      c.train.learning_rate = row.focuse_lr;
      c.train.eta = row.focuse_eta;
      c.train.gamma = row.focuse_gamma;
      c.train.lambda = row.lambda;
    }
    return c;
  }
  throw ValidationError("preset: unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& row : kPresets) {
    names.push_back(std::string(row.dataset) + "-" + row.model);
    names.push_back(std::string(row.dataset) + "-" + row.model + "-focuse");
  }
  return names;
}

KnowledgeGraph load_graph(const RunConfig& config) {
  auto graph = load_dataset(config.train_path, config.valid_path, config.test_path,
                            config.weighted);
  return normalize_weights(std::move(graph), config.normalization);
}

DatasetStats dataset_stats(const KnowledgeGraph& graph, double fraction) {
  DatasetStats s;
  s.train = graph.train.size();
  s.validation = graph.validation.size();
  s.test = graph.test.size();
  if (!graph.test.empty()) {
    s.test_top = split_by_weight(graph.test, {fraction, SplitEnd::kTop}).size();
    s.test_bottom = split_by_weight(graph.test, {fraction, SplitEnd::kBottom}).size();
  }
  s.entities = graph.num_entities();
  s.relations = graph.num_relations();
  return s;
}

nlohmann::json to_json(const DatasetStats& s) {
  return {{"train", s.train},       {"validation", s.validation}, {"test", s.test},
          {"test_top", s.test_top}, {"test_bottom", s.test_bottom}, {"entities", s.entities},
          {"relations", s.relations}};
}

void print_stats(const DatasetStats& s, std::ostream& out) {
  auto line = [&out](const char* label, std::size_t v) {
    out << std::left << std::setw(22) << label << std::right << std::setw(10) << v << '\n';
  };
  line("Training", s.train);
  line("Validation", s.validation);
  line("Test", s.test);
  line("Test (top)", s.test_top);
  line("Test (bottom)", s.test_bottom);
  line("Entities", s.entities);
  line("Relations", s.relations);
}

void print_metrics_table(std::ostream& out,
                         const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  out << std::left << std::setw(10) << "split" << std::right << std::setw(10) << "n"
      << std::setw(12) << "MR" << std::setw(10) << "MRR" << std::setw(10) << "Hits@1"
      << std::setw(10) << "Hits@10" << '\n';
  for (const auto& [name, r] : rows) {
    out << std::left << std::setw(10) << name << std::right << std::setw(10) << r.n_triples
        << std::fixed << std::setprecision(2) << std::setw(12) << r.mr << std::setprecision(4)
        << std::setw(10) << r.mrr << std::setw(10) << r.hits1 << std::setw(10) << r.hits10
        << '\n'
        << std::defaultfloat;
  }
}

TrainResult cmd_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto graph = load_graph(config);
  for (const auto& w : graph.warnings) log << "warning: " << w << '\n';

  std::filesystem::create_directories(config.output_dir);
  write_config_snapshot(config, config.output_dir / "config.json");

  const std::uint32_t report_every = std::max<std::uint32_t>(1, config.train.epochs / 20);
  TrainHooks hooks;
  hooks.on_epoch_end = [&](const EpochStats& e, const EmbeddingTable& emb) {
    if ((e.epoch + 1) % report_every == 0 || e.epoch + 1 == config.train.epochs) {
      log << "epoch " << e.epoch + 1 << '/' << config.train.epochs << "  beta " << e.beta
          << "  loss " << e.mean_loss << '\n';
    }
    if (config.checkpoint_interval > 0 && (e.epoch + 1) % config.checkpoint_interval == 0 &&
        e.epoch + 1 != config.train.epochs) {
      save_checkpoint(emb, config.output_dir /
                               ("checkpoint_epoch" + std::to_string(e.epoch + 1) + ".bin"));
    }
  };

  auto result = train(graph, config.train, hooks);
  save_checkpoint(result.embeddings, config.output_dir / "checkpoint.bin");
  write_loss_csv(result.trace, config.output_dir / "loss.csv");
  return result;
}

nlohmann::json cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint,
                            const EvaluateRequest& request, std::ostream& out) {
  config.validate();
  const auto graph = load_graph(config);
  const auto emb = load_matching_checkpoint(checkpoint, graph);

  std::vector<std::pair<std::string, MetricsReport>> rows;
  if (request.full) {
    rows.emplace_back("full", evaluate(emb, graph.test, graph.filter, config.tie_mode,
                                       config.threads));
  }
  if (request.top) {
    const auto top = split_by_weight(graph.test, {config.fraction, SplitEnd::kTop});
    rows.emplace_back("top", evaluate(emb, top, graph.filter, config.tie_mode, config.threads));
  }
  if (request.bottom) {
    const auto bottom = split_by_weight(graph.test, {config.fraction, SplitEnd::kBottom});
    rows.emplace_back("bottom",
                      evaluate(emb, bottom, graph.filter, config.tie_mode, config.threads));
  }
  print_metrics_table(out, rows);

  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, report] : rows) j[name] = to_json(report);
  std::filesystem::create_directories(config.output_dir);
  write_json(j, config.output_dir / "metrics.json");
  write_config_snapshot(config, config.output_dir / "evaluate_config.json");
  return j;
}

ComparisonReport cmd_compare(const RunConfig& config, const std::filesystem::path& checkpoint,
                             std::ostream& out) {
  config.validate();
  const auto graph = load_graph(config);
  const auto emb = load_matching_checkpoint(checkpoint, graph);
  const auto report =
      compare_splits(emb, graph.test, graph.filter, config.fraction, config.tie_mode,
                     config.threads);
  print_metrics_table(out, {{"top", report.top}, {"bottom", report.bottom}});
  out << "delta MRR     " << report.delta_mrr << '\n'
      << "delta median  " << report.delta_median << '\n';

  std::filesystem::create_directories(config.output_dir);
  write_json(to_json(report), config.output_dir / "compare.json");
  write_config_snapshot(config, config.output_dir / "compare_config.json");
  return report;
}

double cmd_export_scores(const RunConfig& config, const std::filesystem::path& checkpoint,
                         const std::filesystem::path& csv_path, std::ostream& out) {
  config.validate();
  const auto graph = load_graph(config);
  const auto emb = load_matching_checkpoint(checkpoint, graph);
  const auto top = split_by_weight(graph.test, {config.fraction, SplitEnd::kTop});
  const auto bottom = split_by_weight(graph.test, {config.fraction, SplitEnd::kBottom});
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  const double delta = export_scores(emb, graph, top, bottom, csv_path);
  out << "wrote " << top.size() + bottom.size() << " rows to " << csv_path.string() << '\n'
      << "delta median  " << delta << '\n';

  std::filesystem::create_directories(config.output_dir);
  write_config_snapshot(config, config.output_dir / "export_config.json");
  return delta;
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "lambda") return SweepAxis::kLambda;
  if (name == "eta") return SweepAxis::kEta;
  if (name == "k") return SweepAxis::kK;
  if (name == "lr" || name == "learning_rate") return SweepAxis::kLearningRate;
  if (name == "gamma") return SweepAxis::kGamma;
  throw ValidationError("axis: unknown sweep axis '" + std::string(name) + "'");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kLambda: return "lambda";
    case SweepAxis::kEta: return "eta";
    case SweepAxis::kK: return "k";
    case SweepAxis::kLearningRate: return "lr";
    case SweepAxis::kGamma: return "gamma";
  }
  return "unknown";
}

std::vector<SweepRow> cmd_sweep(const RunConfig& base, SweepAxis axis,
                                const std::vector<double>& values, unsigned jobs,
                                std::ostream& log) {
  if (values.empty()) throw ValidationError("values: at least one sweep value is required");
  base.validate();
  const auto graph = load_graph(base);
  const auto top = split_by_weight(graph.test, {base.fraction, SplitEnd::kTop});
  std::filesystem::create_directories(base.output_dir);
  write_config_snapshot(base, base.output_dir / "config.json");

  auto integral = [](double v, const char* field) {
    if (!(v >= 0.0) || v != std::floor(v) || v > 4294967295.0) {
      throw ValidationError(std::string(field) + ": sweep value must be a non-negative integer");
    }
    return static_cast<std::uint32_t>(v);
  };

  std::mutex log_mutex;
  auto run_one = [&](double value) -> SweepRow {
    SweepRow row{value, std::nullopt, "ok"};
    try {
      RunConfig c = base;
      switch (axis) {
        case SweepAxis::kLambda: c.train.lambda = integral(value, "lambda"); break;
        case SweepAxis::kEta: c.train.eta = integral(value, "eta"); break;
        case SweepAxis::kK: c.train.k = integral(value, "k"); break;
        case SweepAxis::kLearningRate: c.train.learning_rate = value; break;
        case SweepAxis::kGamma: c.train.gamma = value; break;
      }
      c.train.validate();
      c.output_dir =
          base.output_dir / ("sweep_" + std::string(to_string(axis)) + "_" + format_value(value));
      std::filesystem::create_directories(c.output_dir);
      write_config_snapshot(c, c.output_dir / "config.json");

      const auto result = train(graph, c.train);
      save_checkpoint(result.embeddings, c.output_dir / "checkpoint.bin");
      write_loss_csv(result.trace, c.output_dir / "loss.csv");
      const auto report = evaluate(result.embeddings, top, graph.filter, c.tie_mode, c.threads);
      write_json({{"top", to_json(report)}}, c.output_dir / "metrics.json");
      row.top_mrr = report.mrr;
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
    }
    std::lock_guard lock(log_mutex);
    log << to_string(axis) << '=' << format_value(value) << "  "
        << (row.top_mrr ? "top MRR " + format_value(*row.top_mrr) : row.status) << '\n';
    return row;
  };

  std::vector<SweepRow> rows(values.size());
  jobs = std::max(1u, jobs);
  for (std::size_t start = 0; start < values.size(); start += jobs) {
    const std::size_t end = std::min(values.size(), start + jobs);
    std::vector<std::future<SweepRow>> running;
    for (std::size_t i = start; i < end; ++i) {
      running.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async, run_one,
                                   values[i]));
    }
    for (std::size_t i = start; i < end; ++i) rows[i] = running[i - start].get();
  }

  std::ofstream csv(base.output_dir / "sweep.csv", std::ios::trunc);
  if (!csv) throw Error("cannot write sweep.csv");
  csv << to_string(axis) << ",top_mrr,status\n" << std::setprecision(17);
  for (const auto& row : rows) {
    csv << format_value(row.value) << ',';
    if (row.top_mrr) csv << *row.top_mrr;
    std::string status = row.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    csv << ',' << status << '\n';
  }
  return rows;
}

}  // namespace focuse::cli
