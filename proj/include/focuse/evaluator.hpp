#pragma once
// Filtered link-prediction evaluation.
//
// Each test triple is ranked against every subject and every object
// replacement drawn from all entities, after dropping replacements that form
// a known-true triple. Ranking uses the raw score f(t); the FocusE layer is a
// training-time construct.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "focuse/graph_store.hpp"
#include "focuse/scorers.hpp"

namespace focuse {

enum class TieMode {
  // 1 + #{score > s} + #{score == s}
  kWorst,
  // max(1, #{score > s} + #{score == s}); n ties rank n.
  kPaperFootnote,
};

TieMode parse_tie_mode(std::string_view name);
std::string_view to_string(TieMode mode);

enum class Side { kSubject, kObject };

struct RankRecord {
  WeightedTriple triple;
  std::uint64_t subject_rank = 1;
  std::uint64_t object_rank = 1;
  double raw_score = 0.0;
};

struct MetricsReport {
  double mr = 0.0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits10 = 0.0;
  std::size_t n_triples = 0;
};

struct ComparisonReport {
  MetricsReport top;
  MetricsReport bottom;
  double delta_mrr = 0.0;
  double delta_median = 0.0;
};

// Rank of the positive's score against corruption scores under `mode`.
// `higher` and `equal` count admissible corruptions only.
std::uint64_t rank_from_counts(std::uint64_t higher, std::uint64_t equal, TieMode mode);

std::uint64_t rank_one_side(const EmbeddingTable& emb, const WeightedTriple& triple, Side side,
                            const FilterIndex& filter, TieMode mode = TieMode::kWorst);

// Both-side filtered ranks of every triple, in input order. Work is spread
// over `threads` workers (0 = hardware concurrency); results do not depend
// on the thread count.
std::vector<RankRecord> rank_triples(const EmbeddingTable& emb,
                                     std::span<const WeightedTriple> triples,
                                     const FilterIndex& filter, TieMode mode = TieMode::kWorst,
                                     unsigned threads = 0);

// MR, MRR and Hits@{1,10} over the 2n ranks of n records.
MetricsReport metrics_from_ranks(std::span<const std::uint64_t> ranks);
MetricsReport metrics_from_records(std::span<const RankRecord> records);

MetricsReport evaluate(const EmbeddingTable& emb, std::span<const WeightedTriple> test,
                       const FilterIndex& filter, TieMode mode = TieMode::kWorst,
                       unsigned threads = 0);

// Median of a sample; mean of the two central values for even sizes.
double median(std::vector<double> values);

ComparisonReport compare_splits(const EmbeddingTable& emb, std::span<const WeightedTriple> test,
                                const FilterIndex& filter, double fraction,
                                TieMode mode = TieMode::kWorst, unsigned threads = 0);

// Writes `split,s,p,o,w,score` rows (labels from the graph's dictionaries) for
// the top then bottom split and returns |median(top) - median(bottom)| of the
// raw scores.
double export_scores(const EmbeddingTable& emb, const KnowledgeGraph& graph,
                     std::span<const WeightedTriple> top, std::span<const WeightedTriple> bottom,
                     const std::filesystem::path& path);

nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const ComparisonReport& report);

}  // namespace focuse
