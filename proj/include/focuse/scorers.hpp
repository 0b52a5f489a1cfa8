#pragma once
// Embedding storage and the TransE / DistMult / ComplEx scoring functions,
// with analytic gradients of each score.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "focuse/graph_store.hpp"

namespace focuse {

enum class ScorerKind : std::uint32_t {
  kTransEL1 = 0,
  kTransEL2 = 1,
  kDistMult = 2,
  kComplEx = 3,
};

std::string_view to_string(ScorerKind kind);
// Accepts "transe" (L1), "transe-l1", "transe-l2", "distmult", "complex".
ScorerKind parse_scorer(std::string_view name);

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Width of a stored embedding row: 2k for ComplEx ([real | imaginary]), k otherwise.
std::size_t embedding_width(ScorerKind kind, std::size_t k);

struct EmbeddingTable {
  ScorerKind scorer = ScorerKind::kTransEL1;
  std::size_t k = 0;
  Matrix entities;
  Matrix relations;

  std::size_t width() const noexcept { return entities.cols(); }
  std::size_t num_entities() const noexcept { return entities.rows(); }
  std::size_t num_relations() const noexcept { return relations.rows(); }

  bool operator==(const EmbeddingTable&) const = default;
};

// Entries i.i.d. uniform in [-1/sqrt(d), 1/sqrt(d)], reproducible from seed.
EmbeddingTable init_embeddings(std::size_t num_entities, std::size_t num_relations,
                               ScorerKind scorer, std::size_t k, std::uint64_t seed);

// Raw scores from embedding rows. Each expects rows of the table's width.
double score_transe(std::span<const double> s, std::span<const double> p,
                    std::span<const double> o, bool l2);
double score_distmult(std::span<const double> s, std::span<const double> p,
                      std::span<const double> o);
double score_complex(std::span<const double> s, std::span<const double> p,
                     std::span<const double> o);

double score(const EmbeddingTable& emb, EntityId s, RelationId p, EntityId o);
inline double score(const EmbeddingTable& emb, const WeightedTriple& t) {
  return score(emb, t.subject, t.predicate, t.object);
}

struct ScoreGradient {
  std::vector<double> d_subject;
  std::vector<double> d_relation;
  std::vector<double> d_object;
};

// Gradient of the raw score. TransE-L1 uses sign() with sign(0) = 0; the L2
// norm's gradient at a zero residual is the zero vector.
ScoreGradient score_gradient(const EmbeddingTable& emb, EntityId s, RelationId p, EntityId o);

// Same as above, accumulating `scale * gradient` into the provided rows.
void accumulate_score_gradient(const EmbeddingTable& emb, EntityId s, RelationId p, EntityId o,
                               double scale, std::span<double> d_subject,
                               std::span<double> d_relation, std::span<double> d_object);

// Entry e equals score(s, p, e) (resp. score(e, p, o)) bit for bit.
std::vector<double> score_all_objects(const EmbeddingTable& emb, EntityId s, RelationId p);
std::vector<double> score_all_subjects(const EmbeddingTable& emb, RelationId p, EntityId o);

// Binary checkpoint; layout documented in docs/checkpoint_format.md.
void save_checkpoint(const EmbeddingTable& emb, const std::filesystem::path& path);
EmbeddingTable load_checkpoint(const std::filesystem::path& path);

}  // namespace focuse
