#include "focuse/graph_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "focuse/errors.hpp"

namespace focuse {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::optional<double> parse_double(std::string_view text) {
  // from_chars rejects a leading '+', which some exporters emit.
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string describe(const KnowledgeGraph& g, const WeightedTriple& t) {
  std::ostringstream out;
  out << "(" << g.entities.label(t.subject) << ", " << g.relations.label(t.predicate)
      << ", " << g.entities.label(t.object) << ", w=" << t.weight << ")";
  return out.str();
}

bool spo_less(const WeightedTriple& a, const WeightedTriple& b) {
  return std::tie(a.subject, a.predicate, a.object) <
         std::tie(b.subject, b.predicate, b.object);
}

}  // namespace

std::uint32_t Dictionary::intern(std::string_view label) {
  if (auto it = index_.find(std::string(label)); it != index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(labels_.size());
  labels_.emplace_back(label);
  index_.emplace(labels_.back(), id);
  return id;
}

std::optional<std::uint32_t> Dictionary::find(std::string_view label) const {
  if (auto it = index_.find(std::string(label)); it != index_.end()) return it->second;
  return std::nullopt;
}

std::vector<RawTriple> load_triples(const std::filesystem::path& path, bool weighted) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");

  const std::size_t arity = weighted ? 4 : 3;
  std::vector<RawTriple> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const auto fields = split_tabs(line);
    if (fields.size() != arity) {
      throw ParseError(path.string(), line_no,
                       "expected " + std::to_string(arity) + " tab-separated fields, got " +
                           std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < 3; ++i) {
      if (fields[i].empty()) throw ParseError(path.string(), line_no, "empty label");
    }
    RawTriple record{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]),
                     1.0};
    if (weighted) {
      const auto w = parse_double(fields[3]);
      if (!w) {
        throw ParseError(path.string(), line_no,
                         "unparsable weight '" + std::string(fields[3]) + "'");
      }
      record.weight = *w;
    }
    records.push_back(std::move(record));
  }
  if (records.empty()) throw ParseError(path.string(), 0, "file contains no triples");
  return records;
}

KnowledgeGraph build_graph(std::span<const RawTriple> train,
                           std::span<const RawTriple> validation,
                           std::span<const RawTriple> test) {
  KnowledgeGraph g;

  auto encode = [&g](std::span<const RawTriple> raw) {
    std::vector<WeightedTriple> out;
    out.reserve(raw.size());
    for (const auto& r : raw) {
      out.push_back({g.entities.intern(r.subject), g.relations.intern(r.predicate),
                     g.entities.intern(r.object), r.weight});
    }
    return out;
  };
  g.train = encode(train);
  g.validation = encode(validation);
  g.test = encode(test);

  if (g.num_entities() > (std::size_t{1} << TripleKey::kEntityBits)) {
    throw ValidationError("too many entities: " + std::to_string(g.num_entities()));
  }
  if (g.num_relations() > (std::size_t{1} << TripleKey::kRelationBits)) {
    throw ValidationError("too many relations: " + std::to_string(g.num_relations()));
  }

  // Last-occurrence weight wins within a split.
  constexpr const char* kSplitNames[] = {"train", "validation", "test"};
  std::vector<WeightedTriple>* splits[] = {&g.train, &g.validation, &g.test};
  std::unordered_map<TripleKey, int, TripleKeyHash> owner;
  for (int si = 0; si < 3; ++si) {
    auto& split = *splits[si];
    std::unordered_map<TripleKey, double, TripleKeyHash> last_weight;
    std::unordered_map<TripleKey, std::size_t, TripleKeyHash> count;
    for (const auto& t : split) {
      last_weight[TripleKey::of(t)] = t.weight;
      ++count[TripleKey::of(t)];
    }
    std::unordered_set<TripleKey, TripleKeyHash> reported;
    for (auto& t : split) {
      const auto key = TripleKey::of(t);
      if (count[key] > 1 && !reported.contains(key)) {
        reported.insert(key);
        g.warnings.push_back(std::string("duplicate triple in ") + kSplitNames[si] + ": " +
                             describe(g, t) + " x" + std::to_string(count[key]));
      }
      if (t.weight != last_weight[key]) {
        t.weight = last_weight[key];
      }
    }
    for (const auto& t : split) {
      const auto key = TripleKey::of(t);
      const auto [it, inserted] = owner.emplace(key, si);
      if (!inserted && it->second != si) {
        g.warnings.push_back(std::string("triple shared by ") + kSplitNames[it->second] +
                             " and " + kSplitNames[si] + ": " + describe(g, t));
        it->second = si;
      }
      g.filter.insert(t);
    }
  }
  return g;
}

KnowledgeGraph normalize_weights(KnowledgeGraph graph, WeightNormalization mode) {
  std::vector<WeightedTriple>* splits[] = {&graph.train, &graph.validation, &graph.test};
  if (mode == WeightNormalization::kPassthrough) {
    for (auto* split : splits) {
      for (const auto& t : *split) {
        if (!(t.weight >= 0.0 && t.weight <= 1.0)) {
          throw ValidationError("weight outside [0, 1]: " + describe(graph, t));
        }
      }
    }
    return graph;
  }

  if (graph.train.empty()) throw ValidationError("minmax normalization needs training triples");
  const auto [lo, hi] = std::minmax_element(
      graph.train.begin(), graph.train.end(),
      [](const WeightedTriple& a, const WeightedTriple& b) { return a.weight < b.weight; });
  const double min_w = lo->weight;
  const double max_w = hi->weight;
  if (!(max_w > min_w)) {
    throw ValidationError("minmax normalization needs non-constant training weights");
  }
  const double range = max_w - min_w;
  for (auto* split : splits) {
    for (auto& t : *split) t.weight = std::clamp((t.weight - min_w) / range, 0.0, 1.0);
  }
  return graph;
}

std::size_t split_size(double fraction, std::size_t n) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("split fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  const double exact = fraction * static_cast<double>(n);
  const double nearest = std::round(exact);
  std::size_t k = std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact)
                      ? static_cast<std::size_t>(nearest)
                      : static_cast<std::size_t>(std::ceil(exact));
  return std::min(k, n);
}

std::vector<WeightedTriple> split_by_weight(std::span<const WeightedTriple> test,
                                            const SplitSelector& selector) {
  if (test.empty()) throw ValidationError("cannot split an empty test set");
  const std::size_t k = split_size(selector.fraction, test.size());
  if (k == 0) throw ValidationError("split selects no triples");

  std::vector<WeightedTriple> sorted(test.begin(), test.end());
  if (selector.end == SplitEnd::kTop) {
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      if (a.weight != b.weight) return a.weight > b.weight;
      return spo_less(a, b);
    });
  } else {
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      if (a.weight != b.weight) return a.weight < b.weight;
      return spo_less(a, b);
    });
  }
  sorted.resize(k);
  return sorted;
}

KnowledgeGraph load_dataset(const std::filesystem::path& train,
                            const std::filesystem::path& validation,
                            const std::filesystem::path& test, bool weighted) {
  const auto train_raw = load_triples(train, weighted);
  std::vector<RawTriple> valid_raw;
  if (!validation.empty()) valid_raw = load_triples(validation, weighted);
  const auto test_raw = load_triples(test, weighted);
  return build_graph(train_raw, valid_raw, test_raw);
}

KnowledgeGraph load_dataset(const std::filesystem::path& dir, bool weighted) {
  std::filesystem::path validation;
  for (const char* name : {"valid.tsv", "val.tsv", "validation.tsv"}) {
    if (std::filesystem::exists(dir / name)) {
      validation = dir / name;
      break;
    }
  }
  return load_dataset(dir / "train.tsv", validation, dir / "test.tsv", weighted);
}

}  // namespace focuse
