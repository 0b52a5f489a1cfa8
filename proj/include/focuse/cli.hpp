#pragma once
// Run configuration and the command implementations behind the `focuse`
// executable. Each command writes its resolved settings next to its outputs
// (`config.json` for train and sweep, `<command>_config.json` otherwise) so the
// run can be repeated exactly.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "focuse/evaluator.hpp"
#include "focuse/graph_store.hpp"
#include "focuse/trainer.hpp"

namespace focuse::cli {

struct RunConfig {
  std::filesystem::path train_path;
  std::filesystem::path valid_path;  // optional
  std::filesystem::path test_path;
  bool weighted = true;
  WeightNormalization normalization = WeightNormalization::kPassthrough;

  TrainConfig train;
  TieMode tie_mode = TieMode::kWorst;
  double fraction = 0.1;
  std::filesystem::path output_dir = "run";
  std::uint32_t checkpoint_interval = 0;  // epochs between checkpoints; 0 = final only
  unsigned threads = 0;                   // evaluation workers; 0 = hardware concurrency

  // Range checks on every field plus existence of the dataset files. Throws
  // ValidationError naming the field.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
// Fields absent from `j` keep their value in `base`. Unknown keys are rejected.
RunConfig from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});
void write_config_snapshot(const RunConfig& config, const std::filesystem::path& path);

// One row of the published hyper-parameter table, e.g. "ppi5k-complex-focuse"
// or "cn15k-transe". Epochs default to the decay horizon of the FocusE row.
RunConfig apply_preset(std::string_view name, RunConfig base = {});
std::vector<std::string> preset_names();

KnowledgeGraph load_graph(const RunConfig& config);

struct DatasetStats {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
  std::size_t test_top = 0;
  std::size_t test_bottom = 0;
  std::size_t entities = 0;
  std::size_t relations = 0;
};

DatasetStats dataset_stats(const KnowledgeGraph& graph, double fraction);
nlohmann::json to_json(const DatasetStats& stats);
void print_stats(const DatasetStats& stats, std::ostream& out);

void print_metrics_table(std::ostream& out,
                         const std::vector<std::pair<std::string, MetricsReport>>& rows);

// Trains and writes checkpoint.bin, loss.csv and config.json into
// config.output_dir.
TrainResult cmd_train(const RunConfig& config, std::ostream& log);

struct EvaluateRequest {
  bool full = true;
  bool top = true;
  bool bottom = true;
};

// Returns {"full": {...}, "top": {...}, "bottom": {...}} for the requested
// splits and writes it to metrics.json in config.output_dir.
nlohmann::json cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint,
                            const EvaluateRequest& request, std::ostream& out);

ComparisonReport cmd_compare(const RunConfig& config, const std::filesystem::path& checkpoint,
                             std::ostream& out);

double cmd_export_scores(const RunConfig& config, const std::filesystem::path& checkpoint,
                         const std::filesystem::path& csv_path, std::ostream& out);

enum class SweepAxis { kLambda, kEta, kK, kLearningRate, kGamma };
SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);

struct SweepRow {
  double value = 0.0;
  std::optional<double> top_mrr;  // empty when the run failed
  std::string status = "ok";
};

// One train + evaluate run per value under the shared seed, each in its own
// `sweep_<axis>_<value>` directory. Writes sweep.csv with
// `value,top_mrr,status`. Failed runs are recorded and the sweep continues.
std::vector<SweepRow> cmd_sweep(const RunConfig& base, SweepAxis axis,
                                const std::vector<double>& values, unsigned jobs,
                                std::ostream& log);

}  // namespace focuse::cli
