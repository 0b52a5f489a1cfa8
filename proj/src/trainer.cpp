#include "focuse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "focuse/errors.hpp"

namespace focuse {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* field, const std::string& what) {
    if (!ok) throw ValidationError(std::string(field) + ": " + what);
  };
  require(k >= 1, "k", "must be >= 1");
  require(eta >= 1, "eta", "must be >= 1");
  require(std::isfinite(learning_rate) && learning_rate > 0.0, "learning_rate",
          "must be a positive finite number");
  require(epochs >= 1, "epochs", "must be >= 1");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma", "must be >= 0");
  require(constant_beta >= 0.0 && constant_beta <= 1.0, "constant_beta", "must lie in [0, 1]");
  require(batch_size >= 1, "batch_size", "must be >= 1");
}

CorruptionBatch sample_corruptions(const WeightedTriple& triple, std::uint32_t eta,
                                   std::size_t num_entities, Rng& rng) {
  if (num_entities < 2) throw ValidationError("corruption needs at least two entities");
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(num_entities - 1));

  CorruptionBatch batch;
  batch.reserve(eta);
  for (std::uint32_t i = 0; i < eta; ++i) {
    const auto side = coin(rng) ? CorruptedSide::kSubject : CorruptedSide::kObject;
    const EntityId original = side == CorruptedSide::kSubject ? triple.subject : triple.object;
    EntityId replacement = pick(rng);
    while (replacement == original) replacement = pick(rng);

    Corruption c{triple, side};
    (side == CorruptedSide::kSubject ? c.triple.subject : c.triple.object) = replacement;
    batch.push_back(c);
  }
  return batch;
}

double pair_loss(double h_pos, double h_neg) noexcept { return softplus(h_neg - h_pos); }

SparseGradient::SparseGradient(std::size_t num_entities, std::size_t num_relations,
                               std::size_t width)
    : entities_(num_entities, width),
      relations_(num_relations, width),
      entity_touched_(num_entities, 0),
      relation_touched_(num_relations, 0) {}

std::span<double> SparseGradient::entity(EntityId e) {
  if (!entity_touched_[e]) {
    entity_touched_[e] = 1;
    entity_list_.push_back(e);
  }
  return entities_.row(e);
}

std::span<double> SparseGradient::relation(RelationId r) {
  if (!relation_touched_[r]) {
    relation_touched_[r] = 1;
    relation_list_.push_back(r);
  }
  return relations_.row(r);
}

std::vector<EntityId> SparseGradient::touched_entities() const {
  auto rows = entity_list_;
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<RelationId> SparseGradient::touched_relations() const {
  auto rows = relation_list_;
  std::sort(rows.begin(), rows.end());
  return rows;
}

void SparseGradient::clear() {
  for (auto e : entity_list_) {
    std::ranges::fill(entities_.row(e), 0.0);
    entity_touched_[e] = 0;
  }
  for (auto r : relation_list_) {
    std::ranges::fill(relations_.row(r), 0.0);
    relation_touched_[r] = 0;
  }
  entity_list_.clear();
  relation_list_.clear();
}

namespace {

double l3_rows(const Matrix& params, std::span<const std::uint32_t> rows, double gamma,
               const std::function<std::span<double>(std::uint32_t)>& grad_row) {
  double penalty = 0.0;
  for (auto r : rows) {
    const auto x = params.row(r);
    auto g = grad_row(r);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double ax = std::abs(x[i]);
      penalty += ax * ax * ax;
      g[i] += 3.0 * gamma * x[i] * ax;
    }
  }
  return gamma * penalty;
}

bool all_zero(std::span<const double> row) {
  return std::ranges::all_of(row, [](double g) { return g == 0.0; });
}

void adam_rows(Matrix& params, Matrix& m, Matrix& v, std::span<const std::uint32_t> rows,
               const std::function<std::span<const double>(std::uint32_t)>& grad_row,
               double lr, double bias1, double bias2) {
  for (auto r : rows) {
    const auto g = grad_row(r);
    if (all_zero(g)) continue;
    auto x = params.row(r);
    auto mr = m.row(r);
    auto vr = v.row(r);
    for (std::size_t i = 0; i < x.size(); ++i) {
      mr[i] = AdamState::kBeta1 * mr[i] + (1.0 - AdamState::kBeta1) * g[i];
      vr[i] = AdamState::kBeta2 * vr[i] + (1.0 - AdamState::kBeta2) * g[i] * g[i];
      const double m_hat = mr[i] / bias1;
      const double v_hat = vr[i] / bias2;
      x[i] -= lr * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
    }
  }
}

}  // namespace

double l3_penalty_gradient(const EmbeddingTable& emb, double gamma, SparseGradient& grad) {
  if (!(gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
  const auto ents = grad.touched_entities();
  const auto rels = grad.touched_relations();
  return l3_rows(emb.entities, ents, gamma, [&grad](std::uint32_t e) { return grad.entity(e); }) +
         l3_rows(emb.relations, rels, gamma,
                 [&grad](std::uint32_t r) { return grad.relation(r); });
}

AdamState AdamState::for_table(const EmbeddingTable& emb) {
  AdamState s;
  s.m_entities = s.v_entities = Matrix(emb.num_entities(), emb.width());
  s.m_relations = s.v_relations = Matrix(emb.num_relations(), emb.width());
  return s;
}

void adam_step(EmbeddingTable& emb, AdamState& state, const SparseGradient& grad,
               double learning_rate) {
  const auto ents = grad.touched_entities();
  const auto rels = grad.touched_relations();
  for (auto e : ents) {
    for (double g : grad.entity_row(e)) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in entity row " + std::to_string(e));
      }
    }
  }
  for (auto r : rels) {
    for (double g : grad.relation_row(r)) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in relation row " + std::to_string(r));
      }
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double bias2 = 1.0 - std::pow(AdamState::kBeta2, t);
  adam_rows(emb.entities, state.m_entities, state.v_entities, ents,
            [&grad](std::uint32_t e) { return grad.entity_row(e); }, learning_rate, bias1,
            bias2);
  adam_rows(emb.relations, state.m_relations, state.v_relations, rels,
            [&grad](std::uint32_t r) { return grad.relation_row(r); }, learning_rate, bias1,
            bias2);
}

double batch_objective(const EmbeddingTable& emb, std::span<const WeightedTriple> positives,
                       std::span<const CorruptionBatch> corruptions, double beta, bool focuse,
                       double gamma, SparseGradient* grad) {
  if (positives.size() != corruptions.size()) {
    throw ValidationError("one corruption batch is required per positive");
  }
  SparseGradient local;
  if (grad == nullptr) {
    local = SparseGradient(emb.num_entities(), emb.num_relations(), emb.width());
    grad = &local;
  }

  auto accumulate = [&](const WeightedTriple& t, double scale) {
    auto ds = grad->entity(t.subject);
    auto dr = grad->relation(t.predicate);
    auto d_o = grad->entity(t.object);
    if (scale != 0.0) {
      accumulate_score_gradient(emb, t.subject, t.predicate, t.object, scale, ds, dr, d_o);
    }
  };

  double loss = 0.0;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto& pos = positives[i];
    const double f_pos = score(emb, pos);
    const double a_pos = focuse ? alpha(pos.weight, beta, Polarity::kPositive) : 1.0;
    const double a_neg = focuse ? alpha(pos.weight, beta, Polarity::kNegative) : 1.0;
    const double h_pos = focuse ? a_pos * softplus(f_pos) : softplus(f_pos);

    double d_h_pos = 0.0;
    for (const auto& c : corruptions[i]) {
      const double f_neg = score(emb, c.triple);
      const double h_neg = focuse ? a_neg * softplus(f_neg) : softplus(f_neg);
      loss += pair_loss(h_pos, h_neg);

      const double q = sigmoid(h_neg - h_pos);  // dL/dh_neg = -dL/dh_pos
      d_h_pos -= q;
      const double d_f_neg = focuse ? q * a_neg * sigmoid(f_neg) : q * sigmoid(f_neg);
      accumulate(c.triple, d_f_neg);
    }
    const double d_f_pos = focuse ? d_h_pos * a_pos * sigmoid(f_pos) : d_h_pos * sigmoid(f_pos);
    accumulate(pos, d_f_pos);
  }
  if (gamma > 0.0) loss += l3_penalty_gradient(emb, gamma, *grad);
  return loss;
}

TrainResult train(const KnowledgeGraph& graph, const TrainConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  if (graph.train.empty()) throw ValidationError("training split is empty");
  if (graph.num_entities() < 2) throw ValidationError("graph needs at least two entities");

  TrainResult result{init_embeddings(graph.num_entities(), graph.num_relations(), config.scorer,
                                     config.k, config.seed),
                     {}};
  auto& emb = result.embeddings;
  auto adam = AdamState::for_table(emb);
  SparseGradient grad(emb.num_entities(), emb.num_relations(), emb.width());

  // Separate stream from initialization so the two never alias.
  Rng rng(config.seed ^ 0x5deece66dULL);
  std::vector<std::size_t> order(graph.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<WeightedTriple> positives;
  std::vector<CorruptionBatch> corruptions;
  const double pairs = static_cast<double>(graph.train.size()) * config.eta;

  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double beta =
        config.focuse ? structural_beta(epoch, config.lambda, config.constant_beta) : 1.0;
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      positives.clear();
      corruptions.clear();
      for (std::size_t j = start; j < end; ++j) {
        const auto& t = graph.train[order[j]];
        positives.push_back(t);
        corruptions.push_back(sample_corruptions(t, config.eta, emb.num_entities(), rng));
      }

      grad.clear();
      const double loss =
          batch_objective(emb, positives, corruptions, beta, config.focuse, config.gamma, &grad);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
      }
      epoch_loss += loss;
      adam_step(emb, adam, grad, config.learning_rate);
    }

    result.trace.push_back({epoch, beta, epoch_loss / pairs});
    if (hooks.on_epoch_end) hooks.on_epoch_end(result.trace.back(), emb);
  }
  return result;
}

}  // namespace focuse
