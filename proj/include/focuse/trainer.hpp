#pragma once
// Training: negative sampling, the pairwise FocusE loss, lazy L3
// regularization, and sparse Adam.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "focuse/focuse_layer.hpp"
#include "focuse/graph_store.hpp"
#include "focuse/scorers.hpp"

namespace focuse {

using Rng = std::mt19937_64;

struct TrainConfig {
  ScorerKind scorer = ScorerKind::kComplEx;
  std::size_t k = 100;
  std::uint32_t eta = 10;           // corruptions per positive
  double learning_rate = 1e-3;
  std::uint32_t epochs = 100;
  double gamma = 0.0;               // L3 weight
  std::uint32_t lambda = 0;         // beta decay horizon in epochs; 0 = constant beta
  double constant_beta = 1.0;       // beta used when lambda == 0
  bool focuse = true;               // false: no modulation layer at all
  std::size_t batch_size = 10000;   // positives per batch
  std::uint64_t seed = 0;

  // Throws ValidationError naming the offending field.
  void validate() const;
};

enum class CorruptedSide { kSubject, kObject };

struct Corruption {
  WeightedTriple triple;  // carries the positive's weight
  CorruptedSide side;
};

using CorruptionBatch = std::vector<Corruption>;

// eta corruptions of one side each. The side is a fair coin; the replacement
// is uniform over all entities, redrawn while it equals the original. Not
// filtered against known triples.
CorruptionBatch sample_corruptions(const WeightedTriple& triple, std::uint32_t eta,
                                   std::size_t num_entities, Rng& rng);

// -log(e^h_pos / (e^h_pos + e^h_neg)) == softplus(h_neg - h_pos).
double pair_loss(double h_pos, double h_neg) noexcept;

// Dense gradient buffers with a record of which rows were written. Rows are
// only marked through entity()/relation().
class SparseGradient {
 public:
  SparseGradient() = default;
  SparseGradient(std::size_t num_entities, std::size_t num_relations, std::size_t width);

  std::span<double> entity(EntityId e);
  std::span<double> relation(RelationId r);

  std::span<const double> entity_row(EntityId e) const { return entities_.row(e); }
  std::span<const double> relation_row(RelationId r) const { return relations_.row(r); }

  // Touched row indices in ascending order.
  std::vector<EntityId> touched_entities() const;
  std::vector<RelationId> touched_relations() const;

  // Zeroes touched rows and forgets them.
  void clear();

 private:
  Matrix entities_;
  Matrix relations_;
  std::vector<std::uint8_t> entity_touched_;
  std::vector<std::uint8_t> relation_touched_;
  std::vector<EntityId> entity_list_;
  std::vector<RelationId> relation_list_;
};

// Adds gamma * d(sum |x|^3)/dx = 3 gamma sign(x) x^2 to every touched row of
// `grad` and returns gamma * sum |x|^3 over those rows.
double l3_penalty_gradient(const EmbeddingTable& emb, double gamma, SparseGradient& grad);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  Matrix m_entities, v_entities;
  Matrix m_relations, v_relations;
  std::uint64_t step = 0;

  static AdamState for_table(const EmbeddingTable& emb);
};

// Bias-corrected Adam on rows whose gradient is not identically zero. The
// step counter advances on every call. Throws NumericError naming the row
// when a gradient entry is not finite; parameters are untouched in that case.
void adam_step(EmbeddingTable& emb, AdamState& state, const SparseGradient& grad,
               double learning_rate);

// Sum of pair losses over every (positive, corruption) pair plus the L3
// penalty on rows touched by the batch. When `grad` is given, the gradient of
// that objective is accumulated into it. corruptions[i] belongs to positives[i].
double batch_objective(const EmbeddingTable& emb, std::span<const WeightedTriple> positives,
                       std::span<const CorruptionBatch> corruptions, double beta, bool focuse,
                       double gamma, SparseGradient* grad);

struct EpochStats {
  std::uint32_t epoch = 0;
  double beta = 1.0;
  double mean_loss = 0.0;  // objective per (positive, corruption) pair
};

struct TrainResult {
  EmbeddingTable embeddings;
  std::vector<EpochStats> trace;
};

struct TrainHooks {
  // Called after each epoch with the current parameters.
  std::function<void(const EpochStats&, const EmbeddingTable&)> on_epoch_end;
};

// Reproducible from config.seed. Throws NumericError identifying the epoch
// and batch if the loss becomes non-finite.
TrainResult train(const KnowledgeGraph& graph, const TrainConfig& config,
                  const TrainHooks& hooks = {});

}  // namespace focuse
