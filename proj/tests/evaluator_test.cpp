#include "focuse/evaluator.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "focuse/errors.hpp"
#include "test_util.hpp"

namespace focuse {
namespace {

constexpr ScorerKind kAllScorers[] = {ScorerKind::kTransEL1, ScorerKind::kTransEL2,
                                      ScorerKind::kDistMult, ScorerKind::kComplEx};

TEST(RankFromCounts, TieModes) {
  EXPECT_EQ(rank_from_counts(0, 0, TieMode::kWorst), 1u);
  EXPECT_EQ(rank_from_counts(0, 0, TieMode::kPaperFootnote), 1u);
  EXPECT_EQ(rank_from_counts(0, 1000, TieMode::kPaperFootnote), 1000u);
  EXPECT_EQ(rank_from_counts(0, 1000, TieMode::kWorst), 1001u);
  EXPECT_EQ(rank_from_counts(3, 2, TieMode::kWorst), 6u);
}

TEST(RankOneSide, DominantPositiveRanksFirst) {
  // DistMult with a positive far above every corruption.
  EmbeddingTable emb{ScorerKind::kDistMult, 1, Matrix(4, 1), Matrix(1, 1)};
  emb.relations.row(0)[0] = 1.0;
  const double v[] = {1.0, 5.0, 0.1, 0.2};
  for (int i = 0; i < 4; ++i) emb.entities.row(i)[0] = v[i];
  FilterIndex filter;
  const WeightedTriple t{1, 0, 1, 1.0};
  filter.insert(t);
  EXPECT_EQ(rank_one_side(emb, t, Side::kObject, filter), 1u);
  EXPECT_EQ(rank_one_side(emb, t, Side::kSubject, filter), 1u);
}

TEST(RankOneSide, ThousandTiesUnderFootnoteMode) {
  // All 1,001 entities share one embedding, so every corruption ties.
  auto emb = init_embeddings(1001, 1, ScorerKind::kDistMult, 3, 1);
  for (std::size_t e = 1; e < 1001; ++e) {
    std::copy(emb.entities.row(0).begin(), emb.entities.row(0).end(), emb.entities.row(e).begin());
  }
  FilterIndex filter;
  const WeightedTriple t{0, 0, 0, 1.0};
  filter.insert(t);
  EXPECT_EQ(rank_one_side(emb, t, Side::kObject, filter, TieMode::kPaperFootnote), 1000u);
  EXPECT_EQ(rank_one_side(emb, t, Side::kObject, filter, TieMode::kWorst), 1001u);
}

TEST(RankOneSide, FilteredCandidatesSkipped) {
  EmbeddingTable emb{ScorerKind::kDistMult, 1, Matrix(4, 1), Matrix(1, 1)};
  emb.relations.row(0)[0] = 1.0;
  const double v[] = {1.0, 1.0, 3.0, 2.0};
  for (int i = 0; i < 4; ++i) emb.entities.row(i)[0] = v[i];
  FilterIndex filter;
  const WeightedTriple t{0, 0, 1, 1.0};
  filter.insert(t);
  EXPECT_EQ(rank_one_side(emb, t, Side::kObject, filter), 4u);  // 2 higher + 1 tie (object 0)
  filter.insert({0, 0, 2, 1.0});
  EXPECT_EQ(rank_one_side(emb, t, Side::kObject, filter), 3u);
}

// Property: ranks agree with the brute-force oracle for every scorer, both
// sides and both tie modes on random graphs.
TEST(RankOneSide, MatchesBruteForceOracle) {
  for (auto kind : kAllScorers) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto g = testing::random_graph(8 + 30 * seed, 3, 120, 15, 25, seed);
      auto emb = testing::random_table(g.num_entities(), g.num_relations(), kind, 4, seed);
      // Duplicate a few rows to force exact ties.
      for (std::size_t e = 0; e + 1 < g.num_entities(); e += 5) {
        std::copy(emb.entities.row(e).begin(), emb.entities.row(e).end(),
                  emb.entities.row(e + 1).begin());
      }
      for (const auto& t : g.test) {
        for (auto side : {Side::kSubject, Side::kObject}) {
          for (auto mode : {TieMode::kWorst, TieMode::kPaperFootnote}) {
            ASSERT_EQ(rank_one_side(emb, t, side, g.filter, mode),
                      testing::brute_force_rank(emb, g, t, side, mode));
          }
        }
      }
    }
  }
}

TEST(RankOneSide, FilteredNeverWorseThanUnfiltered) {
  const auto g = testing::random_graph(30, 2, 200, 0, 40, 9);
  const auto emb = testing::random_table(30, 2, ScorerKind::kComplEx, 3, 9);
  FilterIndex only_self;
  for (const auto& t : g.test) {
    only_self = FilterIndex();
    only_self.insert(t);
    for (auto side : {Side::kSubject, Side::kObject}) {
      EXPECT_LE(rank_one_side(emb, t, side, g.filter), rank_one_side(emb, t, side, only_self));
    }
  }
}

TEST(RankOneSide, MonotoneInPositiveScore) {
  // Raising the positive's object score (via its object row) never worsens
  // its rank while corruption scores stay fixed. DistMult with k = 1 and a
  // dedicated object entity keeps other scores unchanged.
  EmbeddingTable emb{ScorerKind::kDistMult, 1, Matrix(10, 1), Matrix(1, 1)};
  emb.relations.row(0)[0] = 1.0;
  for (int i = 0; i < 10; ++i) emb.entities.row(i)[0] = 0.1 * i;
  FilterIndex filter;
  const WeightedTriple t{9, 0, 0, 1.0};
  filter.insert(t);
  std::uint64_t prev = 100;
  for (double v = -1.0; v <= 1.5; v += 0.05) {
    emb.entities.row(0)[0] = v;
    const auto r = rank_one_side(emb, t, Side::kObject, filter);
    EXPECT_LE(r, prev);
    prev = r;
  }
  EXPECT_EQ(prev, 1u);
}

TEST(Metrics, HandComputedRanks) {
  const std::vector<std::uint64_t> ranks{1, 2, 4};
  const auto r = metrics_from_ranks(ranks);
  EXPECT_NEAR(r.mrr, (1.0 + 0.5 + 0.25) / 3.0, 1e-12);
  EXPECT_NEAR(r.mrr, 0.5833333333333334, 1e-12);
  EXPECT_NEAR(r.mr, 7.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.hits1, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(r.hits10, 1.0);
}

TEST(Metrics, PerfectModel) {
  const std::vector<std::uint64_t> ranks(10, 1);
  const auto r = metrics_from_ranks(ranks);
  EXPECT_EQ(r.mrr, 1.0);
  EXPECT_EQ(r.hits1, 1.0);
  EXPECT_EQ(r.mr, 1.0);
}

TEST(Metrics, InvariantsOnRandomRecords) {
  std::mt19937_64 rng(4);
  std::geometric_distribution<int> geo(0.1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RankRecord> records(1 + trial);
    for (auto& rec : records) {
      rec.subject_rank = 1 + geo(rng);
      rec.object_rank = 1 + geo(rng);
    }
    const auto r = metrics_from_records(records);
    EXPECT_LE(r.hits1, r.hits10);
    EXPECT_LE(1.0 / r.mr, r.mrr + 1e-15);
    EXPECT_LE(r.mrr, 1.0);
    EXPECT_EQ(r.n_triples, records.size());
  }
}

TEST(Evaluate, ThreadCountDoesNotChangeResult) {
  const auto g = testing::random_graph(60, 3, 300, 20, 50, 2);
  const auto emb = testing::random_table(60, 3, ScorerKind::kComplEx, 4, 2);
  const auto one = rank_triples(emb, g.test, g.filter, TieMode::kWorst, 1);
  const auto many = rank_triples(emb, g.test, g.filter, TieMode::kWorst, 4);
  ASSERT_EQ(one.size(), many.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].subject_rank, many[i].subject_rank);
    EXPECT_EQ(one[i].object_rank, many[i].object_rank);
  }
  const auto report = evaluate(emb, g.test, g.filter, TieMode::kWorst, 3);
  const auto recomputed = metrics_from_records(one);
  EXPECT_NEAR(report.mrr, recomputed.mrr, 1e-12);
  EXPECT_NEAR(report.mr, recomputed.mr, 1e-12);
  EXPECT_THROW(evaluate(emb, {}, g.filter), ValidationError);
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_EQ(median({7.0}), 7.0);
  EXPECT_THROW(median({}), ValidationError);
}

TEST(CompareSplits, EqualWeightsGiveZeroDelta) {
  auto g = testing::random_graph(40, 2, 150, 0, 30, 6);
  for (auto& t : g.test) t.weight = 0.5;
  const auto emb = testing::random_table(40, 2, ScorerKind::kDistMult, 4, 6);
  const auto report = compare_splits(emb, g.test, g.filter, 0.1);
  EXPECT_EQ(report.delta_mrr, 0.0);
  EXPECT_EQ(report.delta_median, 0.0);
  EXPECT_EQ(report.top.n_triples, 3u);
}

TEST(CompareSplits, DeltasRecomputableFromParts) {
  const auto g = testing::random_graph(50, 3, 200, 0, 40, 8);
  const auto emb = testing::random_table(50, 3, ScorerKind::kComplEx, 4, 8);
  const auto report = compare_splits(emb, g.test, g.filter, 0.25);
  EXPECT_EQ(report.delta_mrr, report.top.mrr - report.bottom.mrr);
  const auto top = split_by_weight(g.test, {0.25, SplitEnd::kTop});
  EXPECT_NEAR(report.top.mrr, evaluate(emb, top, g.filter).mrr, 1e-15);
}

TEST(ExportScores, RowsAndDeltaMedian) {
  testing::TempDir dir;
  // DistMult, k = 1, relation 1.0, subject entity 0 = 1.0: score(0, 0, o) = e_o.
  std::vector<RawTriple> train{{"x", "r", "a", 1.0}};
  std::vector<RawTriple> test{{"x", "r", "b", 1.0}, {"x", "r", "c", 1.0}, {"x", "r", "d", 1.0},
                              {"x", "r", "e", 0.0}, {"x", "r", "f", 0.0}, {"x", "r", "g", 0.0}};
  auto g = build_graph(train, {}, test);
  EmbeddingTable emb{ScorerKind::kDistMult, 1, Matrix(g.num_entities(), 1), Matrix(1, 1)};
  emb.relations.row(0)[0] = 1.0;
  emb.entities.row(*g.entities.find("x"))[0] = 1.0;
  const double top_scores[] = {1, 2, 3};
  const char* top_labels[] = {"b", "c", "d"};
  for (int i = 0; i < 3; ++i) emb.entities.row(*g.entities.find(top_labels[i]))[0] = top_scores[i];
  for (const char* l : {"e", "f", "g"}) emb.entities.row(*g.entities.find(l))[0] = 1.0;

  const auto top = split_by_weight(g.test, {0.5, SplitEnd::kTop});
  const auto bottom = split_by_weight(g.test, {0.5, SplitEnd::kBottom});
  const double delta = export_scores(emb, g, top, bottom, dir / "scores.csv");
  EXPECT_EQ(delta, 1.0);

  std::ifstream in(dir / "scores.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "split,s,p,o,w,score");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, top.size() + bottom.size());

  EXPECT_THROW(export_scores(emb, g, top, bottom, dir.path() / "missing" / "x.csv"), Error);
}

TEST(ParseTieMode, Names) {
  EXPECT_EQ(parse_tie_mode("worst"), TieMode::kWorst);
  EXPECT_EQ(parse_tie_mode("paper_footnote"), TieMode::kPaperFootnote);
  EXPECT_THROW(parse_tie_mode("best"), ValidationError);
}

}  // namespace
}  // namespace focuse
