#pragma once
// Numeric-enriched knowledge graph storage.
//
// Triples are loaded from tab-separated files (`s\tp\to[\tw]`), labels are
// mapped to dense indices over the union of all splits, and every known
// (s, p, o) is recorded in a filter index used by filtered ranking.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace focuse {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

// One line of a triple file, before dictionary encoding.
struct RawTriple {
  std::string subject;
  std::string predicate;
  std::string object;
  double weight = 1.0;

  bool operator==(const RawTriple&) const = default;
};

struct WeightedTriple {
  EntityId subject = 0;
  RelationId predicate = 0;
  EntityId object = 0;
  double weight = 1.0;

  bool operator==(const WeightedTriple&) const = default;
};

// (s, p, o) packed into one 64-bit key. Entities and relations are limited to
// 2^24 and 2^16 respectively, far above any benchmark graph.
struct TripleKey {
  std::uint64_t value = 0;

  static constexpr unsigned kEntityBits = 24;
  static constexpr unsigned kRelationBits = 16;

  static TripleKey of(EntityId s, RelationId p, EntityId o) noexcept {
    return {(static_cast<std::uint64_t>(s) << (kEntityBits + kRelationBits)) |
            (static_cast<std::uint64_t>(p) << kEntityBits) |
            static_cast<std::uint64_t>(o)};
  }
  static TripleKey of(const WeightedTriple& t) noexcept {
    return of(t.subject, t.predicate, t.object);
  }

  bool operator==(const TripleKey&) const = default;
};

struct TripleKeyHash {
  std::size_t operator()(TripleKey k) const noexcept {
    // splitmix64 finalizer
    std::uint64_t x = k.value + 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return static_cast<std::size_t>(x ^ (x >> 31));
  }
};

// Bijective label <-> dense index map. Indices are assigned in first-seen
// order, starting from 0.
class Dictionary {
 public:
  std::uint32_t intern(std::string_view label);
  std::optional<std::uint32_t> find(std::string_view label) const;
  const std::string& label(std::uint32_t index) const { return labels_.at(index); }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Membership set over every (s, p, o) known to be true.
class FilterIndex {
 public:
  void insert(const WeightedTriple& t) { keys_.insert(TripleKey::of(t)); }
  bool contains(EntityId s, RelationId p, EntityId o) const {
    return keys_.contains(TripleKey::of(s, p, o));
  }
  bool contains(const WeightedTriple& t) const { return keys_.contains(TripleKey::of(t)); }
  std::size_t size() const noexcept { return keys_.size(); }

 private:
  std::unordered_set<TripleKey, TripleKeyHash> keys_;
};

// Immutable after construction; safe to share across reader threads.
struct KnowledgeGraph {
  Dictionary entities;
  Dictionary relations;
  std::vector<WeightedTriple> train;
  std::vector<WeightedTriple> validation;
  std::vector<WeightedTriple> test;
  FilterIndex filter;
  // Non-fatal findings from construction (duplicate triples, split overlap).
  std::vector<std::string> warnings;

  std::size_t num_entities() const noexcept { return entities.size(); }
  std::size_t num_relations() const noexcept { return relations.size(); }

  RawTriple decode(const WeightedTriple& t) const {
    return {entities.label(t.subject), relations.label(t.predicate),
            entities.label(t.object), t.weight};
  }
};

enum class WeightNormalization { kPassthrough, kMinMax };

enum class SplitEnd { kTop, kBottom };

struct SplitSelector {
  double fraction = 0.1;
  SplitEnd end = SplitEnd::kTop;
};

// Reads a tab-separated triple file. With `weighted` every non-empty line
// must carry exactly four fields, otherwise exactly three (weight = 1.0).
// Throws ParseError with the offending line number.
std::vector<RawTriple> load_triples(const std::filesystem::path& path, bool weighted);

// Encodes all three splits against shared dictionaries. Duplicate (s, p, o)
// entries are retained; when their weights disagree every copy takes the
// weight of the last occurrence and a warning is recorded.
KnowledgeGraph build_graph(std::span<const RawTriple> train,
                           std::span<const RawTriple> validation,
                           std::span<const RawTriple> test);

// Passthrough validates that every weight lies in [0, 1]. MinMax rescales all
// splits with the training split's min/max and clamps to [0, 1].
KnowledgeGraph normalize_weights(KnowledgeGraph graph, WeightNormalization mode);

// Number of triples selected by a fraction of n: ceil(fraction * n), with
// products that are integral up to rounding noise treated as exact.
std::size_t split_size(double fraction, std::size_t n);

// The ceil(fraction * |test|) highest- (top) or lowest- (bottom) weighted
// triples. Ties at the cut are broken by ascending (s, p, o).
std::vector<WeightedTriple> split_by_weight(std::span<const WeightedTriple> test,
                                            const SplitSelector& selector);

// Loads `<dir>/train.tsv`, `<dir>/valid.tsv` (or `val.tsv`) and `<dir>/test.tsv`.
KnowledgeGraph load_dataset(const std::filesystem::path& dir, bool weighted);

KnowledgeGraph load_dataset(const std::filesystem::path& train,
                            const std::filesystem::path& validation,
                            const std::filesystem::path& test, bool weighted);

}  // namespace focuse
