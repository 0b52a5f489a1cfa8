#include "focuse/scorers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "focuse/errors.hpp"

namespace focuse {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'F', 'O', 'C', 'U', 'S', 'E', 'K', 'G'};
constexpr std::uint32_t kCheckpointVersion = 1;

double sign(double x) { return (x > 0.0) - (x < 0.0); }

void check_ids(const EmbeddingTable& emb, EntityId s, RelationId p, EntityId o) {
  if (s >= emb.num_entities() || o >= emb.num_entities() || p >= emb.num_relations()) {
    throw ValidationError("triple index out of range for embedding table");
  }
}

}  // namespace

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kTransEL1: return "transe-l1";
    case ScorerKind::kTransEL2: return "transe-l2";
    case ScorerKind::kDistMult: return "distmult";
    case ScorerKind::kComplEx: return "complex";
  }
  return "unknown";
}

ScorerKind parse_scorer(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "transe" || lower == "transe-l1") return ScorerKind::kTransEL1;
  if (lower == "transe-l2") return ScorerKind::kTransEL2;
  if (lower == "distmult") return ScorerKind::kDistMult;
  if (lower == "complex") return ScorerKind::kComplEx;
  throw ValidationError("unknown scorer '" + std::string(name) + "'");
}

std::size_t embedding_width(ScorerKind kind, std::size_t k) {
  return kind == ScorerKind::kComplEx ? 2 * k : k;
}

EmbeddingTable init_embeddings(std::size_t num_entities, std::size_t num_relations,
                               ScorerKind scorer, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("embedding dimensionality k must be >= 1");
  const std::size_t d = embedding_width(scorer, k);
  EmbeddingTable emb{scorer, k, Matrix(num_entities, d), Matrix(num_relations, d)};

  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (auto& x : emb.entities.data()) x = uniform(rng);
  for (auto& x : emb.relations.data()) x = uniform(rng);
  return emb;
}

double score_transe(std::span<const double> s, std::span<const double> p,
                    std::span<const double> o, bool l2) {
  double acc = 0.0;
  if (l2) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double r = (s[i] + p[i]) - o[i];
      acc += r * r;
    }
    return -std::sqrt(acc);
  }
  for (std::size_t i = 0; i < s.size(); ++i) acc += std::abs((s[i] + p[i]) - o[i]);
  return -acc;
}

double score_distmult(std::span<const double> s, std::span<const double> p,
                      std::span<const double> o) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += (s[i] * p[i]) * o[i];
  return acc;
}

// Re(sum_i s_i * p_i * conj(o_i)) with rows laid out as [re | im].
double score_complex(std::span<const double> s, std::span<const double> p,
                     std::span<const double> o) {
  const std::size_t k = s.size() / 2;
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double re = s[i] * p[i] - s[k + i] * p[k + i];
    const double im = s[i] * p[k + i] + s[k + i] * p[i];
    acc += re * o[i] + im * o[k + i];
  }
  return acc;
}

double score(const EmbeddingTable& emb, EntityId s, RelationId p, EntityId o) {
  const auto es = emb.entities.row(s);
  const auto rp = emb.relations.row(p);
  const auto eo = emb.entities.row(o);
  switch (emb.scorer) {
    case ScorerKind::kTransEL1: return score_transe(es, rp, eo, false);
    case ScorerKind::kTransEL2: return score_transe(es, rp, eo, true);
    case ScorerKind::kDistMult: return score_distmult(es, rp, eo);
    case ScorerKind::kComplEx: return score_complex(es, rp, eo);
  }
  return 0.0;
}

void accumulate_score_gradient(const EmbeddingTable& emb, EntityId s, RelationId p, EntityId o,
                               double scale, std::span<double> d_subject,
                               std::span<double> d_relation, std::span<double> d_object) {
  const auto es = emb.entities.row(s);
  const auto rp = emb.relations.row(p);
  const auto eo = emb.entities.row(o);
  const std::size_t d = emb.width();

  switch (emb.scorer) {
    case ScorerKind::kTransEL1:
      for (std::size_t i = 0; i < d; ++i) {
        const double g = -sign((es[i] + rp[i]) - eo[i]) * scale;
        d_subject[i] += g;
        d_relation[i] += g;
        d_object[i] -= g;
      }
      break;
    case ScorerKind::kTransEL2: {
      double norm = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double r = (es[i] + rp[i]) - eo[i];
        norm += r * r;
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) break;
      for (std::size_t i = 0; i < d; ++i) {
        const double g = -((es[i] + rp[i]) - eo[i]) / norm * scale;
        d_subject[i] += g;
        d_relation[i] += g;
        d_object[i] -= g;
      }
      break;
    }
    case ScorerKind::kDistMult:
      for (std::size_t i = 0; i < d; ++i) {
        d_subject[i] += rp[i] * eo[i] * scale;
        d_relation[i] += es[i] * eo[i] * scale;
        d_object[i] += es[i] * rp[i] * scale;
      }
      break;
    case ScorerKind::kComplEx: {
      const std::size_t k = d / 2;
      for (std::size_t i = 0; i < k; ++i) {
        const double a = es[i], b = es[k + i];
        const double c = rp[i], dd = rp[k + i];
        const double e = eo[i], f = eo[k + i];
        d_subject[i] += (c * e + dd * f) * scale;
        d_subject[k + i] += (c * f - dd * e) * scale;
        d_relation[i] += (a * e + b * f) * scale;
        d_relation[k + i] += (a * f - b * e) * scale;
        d_object[i] += (a * c - b * dd) * scale;
        d_object[k + i] += (a * dd + b * c) * scale;
      }
      break;
    }
  }
}

ScoreGradient score_gradient(const EmbeddingTable& emb, EntityId s, RelationId p, EntityId o) {
  check_ids(emb, s, p, o);
  const std::size_t d = emb.width();
  ScoreGradient g{std::vector<double>(d), std::vector<double>(d), std::vector<double>(d)};
  if (s == o) {
    // Subject and object share a row; compute separately so the two slots
    // stay distinguishable.
    std::vector<double> scratch(d);
    accumulate_score_gradient(emb, s, p, o, 1.0, g.d_subject, g.d_relation, scratch);
    std::vector<double> unused_s(d), unused_r(d);
    accumulate_score_gradient(emb, s, p, o, 1.0, unused_s, unused_r, g.d_object);
    return g;
  }
  accumulate_score_gradient(emb, s, p, o, 1.0, g.d_subject, g.d_relation, g.d_object);
  return g;
}

std::vector<double> score_all_objects(const EmbeddingTable& emb, EntityId s, RelationId p) {
  const std::size_t n = emb.num_entities();
  const std::size_t d = emb.width();
  const auto es = emb.entities.row(s);
  const auto rp = emb.relations.row(p);
  std::vector<double> out(n);

  switch (emb.scorer) {
    case ScorerKind::kTransEL1:
    case ScorerKind::kTransEL2: {
      const bool l2 = emb.scorer == ScorerKind::kTransEL2;
      std::vector<double> translated(d);
      for (std::size_t i = 0; i < d; ++i) translated[i] = es[i] + rp[i];
      for (std::size_t e = 0; e < n; ++e) {
        const auto eo = emb.entities.row(e);
        double acc = 0.0;
        if (l2) {
          for (std::size_t i = 0; i < d; ++i) {
            const double r = translated[i] - eo[i];
            acc += r * r;
          }
          out[e] = -std::sqrt(acc);
        } else {
          for (std::size_t i = 0; i < d; ++i) acc += std::abs(translated[i] - eo[i]);
          out[e] = -acc;
        }
      }
      break;
    }
    case ScorerKind::kDistMult: {
      std::vector<double> sp(d);
      for (std::size_t i = 0; i < d; ++i) sp[i] = es[i] * rp[i];
      for (std::size_t e = 0; e < n; ++e) {
        const auto eo = emb.entities.row(e);
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) acc += sp[i] * eo[i];
        out[e] = acc;
      }
      break;
    }
    case ScorerKind::kComplEx: {
      const std::size_t k = d / 2;
      std::vector<double> re(k), im(k);
      for (std::size_t i = 0; i < k; ++i) {
        re[i] = es[i] * rp[i] - es[k + i] * rp[k + i];
        im[i] = es[i] * rp[k + i] + es[k + i] * rp[i];
      }
      for (std::size_t e = 0; e < n; ++e) {
        const auto eo = emb.entities.row(e);
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) acc += re[i] * eo[i] + im[i] * eo[k + i];
        out[e] = acc;
      }
      break;
    }
  }
  return out;
}

std::vector<double> score_all_subjects(const EmbeddingTable& emb, RelationId p, EntityId o) {
  const std::size_t n = emb.num_entities();
  std::vector<double> out(n);
  for (std::size_t e = 0; e < n; ++e) out[e] = score(emb, static_cast<EntityId>(e), p, o);
  return out;
}

void save_checkpoint(const EmbeddingTable& emb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());

  auto put_u32 = [&out](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_u64 = [&out](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  auto put_matrix = [&out](const Matrix& m) {
    out.write(reinterpret_cast<const char*>(m.data().data()),
              static_cast<std::streamsize>(m.data().size() * sizeof(double)));
  };

  out.write(kMagic, sizeof(kMagic));
  put_u32(kCheckpointVersion);
  put_u32(static_cast<std::uint32_t>(emb.scorer));
  put_u64(emb.k);
  put_u64(emb.num_entities());
  put_u64(emb.num_relations());
  put_u64(emb.width());
  put_matrix(emb.entities);
  put_matrix(emb.relations);
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

EmbeddingTable load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());

  auto fail = [&path](const std::string& what) {
    return Error("invalid checkpoint " + path.string() + ": " + what);
  };
  auto get_u32 = [&in] {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get_u64 = [&in] {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };

  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw fail("bad magic");
  const auto version = get_u32();
  if (version != kCheckpointVersion) throw fail("unsupported version " + std::to_string(version));
  const auto scorer_raw = get_u32();
  if (scorer_raw > static_cast<std::uint32_t>(ScorerKind::kComplEx)) throw fail("unknown scorer");
  const auto scorer = static_cast<ScorerKind>(scorer_raw);
  const auto k = get_u64();
  const auto n_entities = get_u64();
  const auto n_relations = get_u64();
  const auto width = get_u64();
  if (!in) throw fail("truncated header");
  if (k == 0 || width != embedding_width(scorer, k)) throw fail("width inconsistent with k");

  EmbeddingTable emb{scorer, k, Matrix(n_entities, width), Matrix(n_relations, width)};
  for (Matrix* m : {&emb.entities, &emb.relations}) {
    in.read(reinterpret_cast<char*>(m->data().data()),
            static_cast<std::streamsize>(m->data().size() * sizeof(double)));
  }
  if (!in) throw fail("truncated matrices");
  if (in.peek() != std::char_traits<char>::eof()) throw fail("trailing bytes");
  for (Matrix* m : {&emb.entities, &emb.relations}) {
    for (double x : m->data()) {
      if (!std::isfinite(x)) throw fail("non-finite entry");
    }
  }
  return emb;
}

}  // namespace focuse
