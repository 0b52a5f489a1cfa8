#include "focuse/scorers.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "focuse/errors.hpp"
#include "test_util.hpp"

namespace focuse {
namespace {

constexpr ScorerKind kAllScorers[] = {ScorerKind::kTransEL1, ScorerKind::kTransEL2,
                                      ScorerKind::kDistMult, ScorerKind::kComplEx};

// Table with hand-set rows: entity 0 = s, entity 1 = o, relation 0 = p.
EmbeddingTable table_of(ScorerKind kind, std::vector<double> s, std::vector<double> p,
                        std::vector<double> o) {
  const std::size_t d = s.size();
  EmbeddingTable emb{kind, kind == ScorerKind::kComplEx ? d / 2 : d, Matrix(2, d), Matrix(1, d)};
  std::copy(s.begin(), s.end(), emb.entities.row(0).begin());
  std::copy(o.begin(), o.end(), emb.entities.row(1).begin());
  std::copy(p.begin(), p.end(), emb.relations.row(0).begin());
  return emb;
}

TEST(InitEmbeddings, DeterministicFromSeed) {
  const auto a = init_embeddings(30, 4, ScorerKind::kDistMult, 8, 42);
  const auto b = init_embeddings(30, 4, ScorerKind::kDistMult, 8, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, init_embeddings(30, 4, ScorerKind::kDistMult, 8, 43));
}

TEST(InitEmbeddings, ComplExWidthIsTwiceK) {
  const auto emb = init_embeddings(5, 2, ScorerKind::kComplEx, 200, 1);
  EXPECT_EQ(emb.entities.cols(), 400u);
  EXPECT_EQ(emb.relations.cols(), 400u);
  EXPECT_EQ(emb.k, 200u);
}

TEST(InitEmbeddings, BoundedByInverseSqrtWidth) {
  const auto emb = init_embeddings(50, 3, ScorerKind::kTransEL2, 16, 9);
  for (double x : emb.entities.data()) {
    EXPECT_LE(std::abs(x), 0.25);
    EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(InitEmbeddings, ZeroKRejected) {
  EXPECT_THROW(init_embeddings(5, 2, ScorerKind::kDistMult, 0, 1), ValidationError);
}

TEST(ScoreTransE, ExactTranslationScoresZero) {
  const auto emb = table_of(ScorerKind::kTransEL1, {1, 0}, {0, 1}, {1, 1});
  EXPECT_EQ(score(emb, 0, 0, 1), 0.0);
}

TEST(ScoreTransE, L2HandNorm) {
  const auto emb = table_of(ScorerKind::kTransEL2, {0, 0}, {0, 0}, {3, 4});
  EXPECT_DOUBLE_EQ(score(emb, 0, 0, 1), -5.0);
}

TEST(ScoreTransE, NeverPositive) {
  for (auto kind : {ScorerKind::kTransEL1, ScorerKind::kTransEL2}) {
    const auto emb = testing::random_table(20, 3, kind, 6, 5);
    for (EntityId s = 0; s < 20; ++s) {
      for (EntityId o = 0; o < 20; ++o) EXPECT_LE(score(emb, s, 1, o), 0.0);
    }
  }
}

TEST(ScoreDistMult, ProductSum) {
  const auto emb = table_of(ScorerKind::kDistMult, {1, 2}, {1, 1}, {1, 1});
  EXPECT_EQ(score(emb, 0, 0, 1), 3.0);
}

TEST(ScoreDistMult, SymmetricAndZeroRelationAnnihilates) {
  auto emb = testing::random_table(10, 2, ScorerKind::kDistMult, 7, 3);
  for (EntityId s = 0; s < 10; ++s) {
    for (EntityId o = 0; o < 10; ++o) {
      // Product order differs between the two sides, so allow a few ulps.
      EXPECT_NEAR(score(emb, s, 0, o), score(emb, o, 0, s), 1e-14);
    }
  }
  std::ranges::fill(emb.relations.row(1), 0.0);
  for (EntityId s = 0; s < 10; ++s) EXPECT_EQ(score(emb, s, 1, (s + 3) % 10), 0.0);
}

TEST(ScoreComplEx, RealSubspaceEqualsDistMult) {
  auto cx = testing::random_table(8, 2, ScorerKind::kComplEx, 5, 21);
  auto dm = init_embeddings(8, 2, ScorerKind::kDistMult, 5, 0);
  for (std::size_t r = 0; r < 8; ++r) {
    auto row = cx.entities.row(r);
    std::fill(row.begin() + 5, row.end(), 0.0);
    std::copy(row.begin(), row.begin() + 5, dm.entities.row(r).begin());
  }
  for (std::size_t r = 0; r < 2; ++r) {
    auto row = cx.relations.row(r);
    std::fill(row.begin() + 5, row.end(), 0.0);
    std::copy(row.begin(), row.begin() + 5, dm.relations.row(r).begin());
  }
  for (EntityId s = 0; s < 8; ++s) {
    for (EntityId o = 0; o < 8; ++o) {
      EXPECT_EQ(score(cx, s, 1, o), score(dm, s, 1, o));
    }
  }
}

TEST(ScoreComplEx, SelfLoopWithImaginaryRelationIsZero) {
  // Re(sum (a+bi)(ci)(a-bi)) = Re(ci * sum(a^2+b^2)) = 0.
  const auto emb = table_of(ScorerKind::kComplEx, {0.3, -1.2, 0.7, 0.4}, {0, 0, 1.5, -0.5},
                            {0.3, -1.2, 0.7, 0.4});
  EXPECT_NEAR(score(emb, 0, 0, 1), 0.0, 1e-15);
  EXPECT_NEAR(score(emb, 0, 0, 0), 0.0, 1e-15);
}

TEST(ScoreComplEx, AsymmetricRelation) {
  const auto emb = table_of(ScorerKind::kComplEx, {1, 0, 0, 1}, {0.5, 0.2, 0.9, -0.4},
                            {0, 1, 1, 0});
  EXPECT_NE(score(emb, 0, 0, 1), score(emb, 1, 0, 0));
}

TEST(ScoreGradient, DistMultProductRule) {
  const auto emb = testing::random_table(3, 1, ScorerKind::kDistMult, 4, 8);
  const auto g = score_gradient(emb, 0, 0, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(g.d_subject[i], emb.relations.row(0)[i] * emb.entities.row(2)[i]);
  }
}

TEST(ScoreGradient, TransEL2ZeroResidualIsZeroVector) {
  const auto emb = table_of(ScorerKind::kTransEL2, {1, 0}, {0, 1}, {1, 1});
  const auto g = score_gradient(emb, 0, 0, 1);
  for (auto* v : {&g.d_subject, &g.d_relation, &g.d_object}) {
    for (double x : *v) EXPECT_EQ(x, 0.0);
  }
}

TEST(ScoreGradient, TransEL1SignOfZeroIsZero) {
  const auto emb = table_of(ScorerKind::kTransEL1, {1, 2}, {0, 1}, {1, 0});
  const auto g = score_gradient(emb, 0, 0, 1);
  EXPECT_EQ(g.d_subject[0], 0.0);
  EXPECT_EQ(g.d_subject[1], -1.0);
  EXPECT_EQ(g.d_object[1], 1.0);
}

// Property: analytic score gradients agree with central differences.
TEST(ScoreGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(99);
  for (auto kind : kAllScorers) {
    for (int trial = 0; trial < 25; ++trial) {
      const auto emb = testing::random_table(4, 2, kind, 5, 1000 + trial);
      const EntityId s = 0, o = trial % 2 == 0 ? 1 : 0;  // include a self loop
      const RelationId p = 1;
      if (kind == ScorerKind::kTransEL1) {
        bool near_kink = false;
        for (std::size_t i = 0; i < emb.width(); ++i) {
          const double r = emb.entities.row(s)[i] + emb.relations.row(p)[i] - emb.entities.row(o)[i];
          near_kink |= std::abs(r) < 1e-3;
        }
        // Self loops put the residual at r_p, which is away from 0 almost surely.
        if (near_kink) continue;
      }

      const auto g = score_gradient(emb, s, p, o);
      // Perturb the subject slot, relation and object slot independently so
      // self loops are checked per slot.
      auto slot_score = [&](const std::vector<double>& ss, const std::vector<double>& pp,
                            const std::vector<double>& oo) {
        switch (kind) {
          case ScorerKind::kTransEL1: return score_transe(ss, pp, oo, false);
          case ScorerKind::kTransEL2: return score_transe(ss, pp, oo, true);
          case ScorerKind::kDistMult: return score_distmult(ss, pp, oo);
          case ScorerKind::kComplEx: return score_complex(ss, pp, oo);
        }
        return 0.0;
      };
      const std::vector<double> s0(emb.entities.row(s).begin(), emb.entities.row(s).end());
      const std::vector<double> p0(emb.relations.row(p).begin(), emb.relations.row(p).end());
      const std::vector<double> o0(emb.entities.row(o).begin(), emb.entities.row(o).end());
      const double h = 1e-5;
      std::vector<double> analytic, numeric;
      for (int slot = 0; slot < 3; ++slot) {
        const auto& grad = slot == 0 ? g.d_subject : slot == 1 ? g.d_relation : g.d_object;
        for (std::size_t i = 0; i < emb.width(); ++i) {
          auto ss = s0, pp = p0, oo = o0;
          auto& v = slot == 0 ? ss : slot == 1 ? pp : oo;
          v[i] += h;
          const double up = slot_score(ss, pp, oo);
          v[i] -= 2 * h;
          const double down = slot_score(ss, pp, oo);
          numeric.push_back((up - down) / (2 * h));
          analytic.push_back(grad[i]);
        }
      }
      EXPECT_LT(testing::relative_error(analytic, numeric), 1e-4)
          << to_string(kind) << " trial " << trial;
    }
  }
}

TEST(ScoreAll, MatchesPerTripleBitForBit) {
  for (auto kind : kAllScorers) {
    for (std::size_t n : {3u, 17u, 100u}) {
      const auto emb = testing::random_table(n, 3, kind, 6, n * 31);
      for (EntityId anchor = 0; anchor < n; anchor += 7) {
        for (RelationId p = 0; p < 3; ++p) {
          const auto objs = score_all_objects(emb, anchor, p);
          const auto subs = score_all_subjects(emb, p, anchor);
          ASSERT_EQ(objs.size(), n);
          for (EntityId e = 0; e < n; ++e) {
            ASSERT_EQ(objs[e], score(emb, anchor, p, e)) << to_string(kind);
            ASSERT_EQ(subs[e], score(emb, e, p, anchor)) << to_string(kind);
          }
        }
      }
    }
  }
}

TEST(ScoreAll, DistMultIsMatrixVectorProduct) {
  const auto emb = testing::random_table(25, 2, ScorerKind::kDistMult, 9, 4);
  const auto objs = score_all_objects(emb, 3, 1);
  for (EntityId e = 0; e < 25; ++e) {
    double dot = 0.0;
    for (std::size_t i = 0; i < 9; ++i) {
      dot += emb.entities.row(e)[i] * (emb.entities.row(3)[i] * emb.relations.row(1)[i]);
    }
    EXPECT_NEAR(objs[e], dot, 1e-12);
  }
}

TEST(ScoreAll, TransEArgmaxIsNearestToTranslation) {
  const auto emb = testing::random_table(40, 2, ScorerKind::kTransEL2, 5, 12);
  const auto objs = score_all_objects(emb, 7, 1);
  const auto best = std::distance(objs.begin(), std::max_element(objs.begin(), objs.end()));
  double best_dist = 1e300;
  std::size_t nearest = 0;
  for (std::size_t e = 0; e < 40; ++e) {
    double d = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      const double r = emb.entities.row(7)[i] + emb.relations.row(1)[i] - emb.entities.row(e)[i];
      d += r * r;
    }
    if (d < best_dist) best_dist = d, nearest = e;
  }
  EXPECT_EQ(static_cast<std::size_t>(best), nearest);
}

TEST(ScoreInvariants, TransEL2InvariantUnderOrthogonalTransform) {
  auto emb = testing::random_table(10, 2, ScorerKind::kTransEL2, 2, 77);
  auto rotated = emb;
  const double theta = 0.7;
  const double c = std::cos(theta), s = std::sin(theta);
  for (Matrix* m : {&rotated.entities, &rotated.relations}) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      auto row = m->row(r);
      const double x = row[0], y = row[1];
      row[0] = c * x - s * y;
      row[1] = s * x + c * y;
    }
  }
  for (EntityId a = 0; a < 10; ++a) {
    for (EntityId b = 0; b < 10; ++b) {
      EXPECT_NEAR(score(emb, a, 1, b), score(rotated, a, 1, b), 1e-12);
    }
  }
}

TEST(Checkpoint, RoundTripsExactly) {
  testing::TempDir dir;
  for (auto kind : kAllScorers) {
    const auto emb = testing::random_table(13, 4, kind, 3, 5);
    save_checkpoint(emb, dir / "c.bin");
    EXPECT_EQ(load_checkpoint(dir / "c.bin"), emb);
  }
}

TEST(Checkpoint, RejectsCorruptFiles) {
  testing::TempDir dir;
  testing::write_file(dir / "junk.bin", "not a checkpoint");
  EXPECT_THROW(load_checkpoint(dir / "junk.bin"), Error);

  const auto emb = testing::random_table(4, 1, ScorerKind::kDistMult, 2, 1);
  save_checkpoint(emb, dir / "c.bin");
  std::filesystem::resize_file(dir / "c.bin", std::filesystem::file_size(dir / "c.bin") - 8);
  EXPECT_THROW(load_checkpoint(dir / "c.bin"), Error);
}

TEST(ParseScorer, KnownNames) {
  EXPECT_EQ(parse_scorer("TransE"), ScorerKind::kTransEL1);
  EXPECT_EQ(parse_scorer("transe-l2"), ScorerKind::kTransEL2);
  EXPECT_EQ(parse_scorer("ComplEx"), ScorerKind::kComplEx);
  EXPECT_THROW(parse_scorer("rotate"), ValidationError);
}

}  // namespace
}  // namespace focuse
