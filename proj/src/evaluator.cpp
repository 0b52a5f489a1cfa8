#include "focuse/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <thread>

#include "focuse/errors.hpp"

namespace focuse {

TieMode parse_tie_mode(std::string_view name) {
  if (name == "worst") return TieMode::kWorst;
  if (name == "paper_footnote" || name == "footnote") return TieMode::kPaperFootnote;
  throw ValidationError("unknown tie mode '" + std::string(name) + "'");
}

std::string_view to_string(TieMode mode) {
  return mode == TieMode::kWorst ? "worst" : "paper_footnote";
}

std::uint64_t rank_from_counts(std::uint64_t higher, std::uint64_t equal, TieMode mode) {
  if (mode == TieMode::kWorst) return 1 + higher + equal;
  return std::max<std::uint64_t>(1, higher + equal);
}

std::uint64_t rank_one_side(const EmbeddingTable& emb, const WeightedTriple& triple, Side side,
                            const FilterIndex& filter, TieMode mode) {
  const bool objects = side == Side::kObject;
  const auto scores = objects ? score_all_objects(emb, triple.subject, triple.predicate)
                              : score_all_subjects(emb, triple.predicate, triple.object);
  const EntityId original = objects ? triple.object : triple.subject;
  const double positive = scores[original];

  std::uint64_t higher = 0;
  std::uint64_t equal = 0;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (e == original) continue;
    const auto candidate = static_cast<EntityId>(e);
    const bool known = objects ? filter.contains(triple.subject, triple.predicate, candidate)
                               : filter.contains(candidate, triple.predicate, triple.object);
    if (known) continue;
    if (scores[e] > positive) {
      ++higher;
    } else if (scores[e] == positive) {
      ++equal;
    }
  }
  return rank_from_counts(higher, equal, mode);
}

std::vector<RankRecord> rank_triples(const EmbeddingTable& emb,
                                     std::span<const WeightedTriple> triples,
                                     const FilterIndex& filter, TieMode mode, unsigned threads) {
  std::vector<RankRecord> records(triples.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& t = triples[i];
      records[i] = {t, rank_one_side(emb, t, Side::kSubject, filter, mode),
                    rank_one_side(emb, t, Side::kObject, filter, mode), score(emb, t)};
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, triples.size()));
  if (threads <= 1) {
    work(0, triples.size());
    return records;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (triples.size() + threads - 1) / threads;
  for (std::size_t begin = 0; begin < triples.size(); begin += chunk) {
    pool.emplace_back(work, begin, std::min(triples.size(), begin + chunk));
  }
  pool.clear();  // joins
  return records;
}

MetricsReport metrics_from_ranks(std::span<const std::uint64_t> ranks) {
  if (ranks.empty()) throw ValidationError("no ranks to summarize");
  // Reduce in rank order so the result does not depend on triple order.
  std::vector<std::uint64_t> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  MetricsReport r;
  for (auto rank : sorted) {
    r.mr += static_cast<double>(rank);
    r.mrr += 1.0 / static_cast<double>(rank);
    r.hits1 += rank <= 1 ? 1.0 : 0.0;
    r.hits10 += rank <= 10 ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(ranks.size());
  r.mr /= n;
  r.mrr /= n;
  r.hits1 /= n;
  r.hits10 /= n;
  r.n_triples = ranks.size() / 2;
  return r;
}

MetricsReport metrics_from_records(std::span<const RankRecord> records) {
  std::vector<std::uint64_t> ranks;
  ranks.reserve(2 * records.size());
  for (const auto& r : records) {
    ranks.push_back(r.subject_rank);
    ranks.push_back(r.object_rank);
  }
  auto report = metrics_from_ranks(ranks);
  report.n_triples = records.size();
  return report;
}

MetricsReport evaluate(const EmbeddingTable& emb, std::span<const WeightedTriple> test,
                       const FilterIndex& filter, TieMode mode, unsigned threads) {
  if (test.empty()) throw ValidationError("cannot evaluate an empty test split");
  return metrics_from_records(rank_triples(emb, test, filter, mode, threads));
}

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return (lower + upper) / 2.0;
}

namespace {

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

std::vector<double> raw_scores(const EmbeddingTable& emb, std::span<const WeightedTriple> ts) {
  std::vector<double> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(score(emb, t));
  return out;
}

}  // namespace

ComparisonReport compare_splits(const EmbeddingTable& emb, std::span<const WeightedTriple> test,
                                const FilterIndex& filter, double fraction, TieMode mode,
                                unsigned threads) {
  const auto top = split_by_weight(test, {fraction, SplitEnd::kTop});
  const auto bottom = split_by_weight(test, {fraction, SplitEnd::kBottom});
  ComparisonReport report;
  report.top = evaluate(emb, top, filter, mode, threads);
  report.bottom = evaluate(emb, bottom, filter, mode, threads);
  report.delta_mrr = report.top.mrr - report.bottom.mrr;
  report.delta_median = std::abs(median(raw_scores(emb, top)) - median(raw_scores(emb, bottom)));
  return report;
}

double export_scores(const EmbeddingTable& emb, const KnowledgeGraph& graph,
                     std::span<const WeightedTriple> top, std::span<const WeightedTriple> bottom,
                     const std::filesystem::path& path) {
  if (top.empty() || bottom.empty()) throw ValidationError("score export needs non-empty splits");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write score export " + path.string());

  out << "split,s,p,o,w,score\n" << std::setprecision(17);
  auto write = [&](std::string_view label, std::span<const WeightedTriple> split) {
    std::vector<double> scores = raw_scores(emb, split);
    for (std::size_t i = 0; i < split.size(); ++i) {
      const auto raw = graph.decode(split[i]);
      out << label << ',' << csv_field(raw.subject) << ',' << csv_field(raw.predicate) << ','
          << csv_field(raw.object) << ','
          << split[i].weight << ',' << scores[i] << '\n';
    }
    return scores;
  };
  const auto top_scores = write("top", top);
  const auto bottom_scores = write("bottom", bottom);
  if (!out) throw Error("failed writing score export " + path.string());
  return std::abs(median(top_scores) - median(bottom_scores));
}

nlohmann::json to_json(const MetricsReport& r) {
  return {{"mr", r.mr}, {"mrr", r.mrr}, {"hits1", r.hits1}, {"hits10", r.hits10},
          {"n_triples", r.n_triples}};
}

nlohmann::json to_json(const ComparisonReport& r) {
  return {{"top", to_json(r.top)},
          {"bottom", to_json(r.bottom)},
          {"delta_mrr", r.delta_mrr},
          {"delta_median", r.delta_median}};
}

}  // namespace focuse
