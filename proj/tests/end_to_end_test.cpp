// Train and evaluate on a small planted graph where weight tracks structure.

#include <gtest/gtest.h>

#include "focuse/evaluator.hpp"
#include "focuse/trainer.hpp"
#include "test_util.hpp"

namespace focuse {
namespace {

TrainConfig planted_config(std::uint32_t lambda) {
  TrainConfig c;
  c.scorer = ScorerKind::kComplEx;
  c.k = 20;
  c.eta = 5;
  c.learning_rate = 1e-2;
  c.epochs = 60;
  c.batch_size = 500;
  c.seed = 1;
  c.lambda = lambda;
  return c;
}

class PlantedGraph : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    graph_ = new KnowledgeGraph(testing::planted_graph(200, 4, 2, 0.4, 4000, 1));
  }
  static void TearDownTestSuite() { delete graph_; }

  ComparisonReport run(std::uint32_t lambda) const {
    const auto result = train(*graph_, planted_config(lambda));
    return compare_splits(result.embeddings, graph_->test, graph_->filter, 0.1, TieMode::kWorst,
                          1);
  }

  static KnowledgeGraph* graph_;
};

KnowledgeGraph* PlantedGraph::graph_ = nullptr;

TEST_F(PlantedGraph, FocusEWidensTopBottomGap) {
  const auto baseline = run(0);
  const auto focused = run(30);
  EXPECT_GT(focused.delta_mrr, baseline.delta_mrr + 0.05);
  EXPECT_GT(focused.delta_median, baseline.delta_median);
}

TEST_F(PlantedGraph, LongerDecayDoesNotHurtTopSplit) {
  EXPECT_GE(run(60).top.mrr, run(0).top.mrr);
}

}  // namespace
}  // namespace focuse
