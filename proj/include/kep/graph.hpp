#pragma once
// Dictionary-encoded knowledge graph plus the scene view used for entity
// prediction.
//
// Nodes and relations are opaque labels mapped to dense ids in
// first-appearance order. Triples are kept in insertion order (deduplicated)
// with two lookup indexes:
//   (head, relation) -> sorted tails
//   (tail, relation) -> sorted heads
// A KnowledgeGraph is immutable once built; use GraphBuilder or build_graph.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kep/types.hpp"

namespace kep {

// Bijective label <-> dense id map.
class Vocabulary {
 public:
  std::uint32_t intern(std::string_view label);
  std::optional<std::uint32_t> find(std::string_view label) const;
  const std::string& label(std::uint32_t id) const { return labels_.at(id); }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  std::size_t num_entities() const { return nodes_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  std::size_t num_triples() const { return triples_.size(); }

  const Vocabulary& nodes() const { return nodes_; }
  const Vocabulary& relations() const { return relations_; }
  const std::vector<Triple>& triples() const { return triples_; }

  bool contains(const Triple& t) const;
  // Empty span when the key is absent.
  std::span<const EntityId> tails(EntityId head, RelationId relation) const;
  std::span<const EntityId> heads(EntityId tail, RelationId relation) const;

  std::optional<EntityId> entity(std::string_view label) const { return nodes_.find(label); }
  std::optional<RelationId> relation(std::string_view label) const {
    return relations_.find(label);
  }

  // Every distinct entity that is the tail of `relation`, ascending.
  IdSet tail_vocabulary(RelationId relation) const;

  std::vector<LabelTriple> to_labels() const;

 private:
  friend class GraphBuilder;

  static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }
  struct TripleHash {
    std::size_t operator()(const Triple& t) const noexcept;
  };

  Vocabulary nodes_;
  Vocabulary relations_;
  std::vector<Triple> triples_;
  std::unordered_set<Triple, TripleHash> triple_set_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> index_hr_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> index_tr_;
};

// Incremental construction. Vocabularies of a seed graph are preserved so that
// ids stay stable when a graph is extended.
class GraphBuilder {
 public:
  GraphBuilder() = default;
  explicit GraphBuilder(const KnowledgeGraph& seed);
  // Same vocabularies as `g`, no triples.
  static GraphBuilder with_vocabulary(const KnowledgeGraph& g);

  EntityId add_entity(std::string_view label) { return graph_.nodes_.intern(label); }
  RelationId add_relation(std::string_view label) { return graph_.relations_.intern(label); }

  // Returns false when the triple was already present.
  bool add(const Triple& t);
  bool add(std::string_view head, std::string_view relation, std::string_view tail);

  KnowledgeGraph build() &&;

 private:
  KnowledgeGraph graph_;
};

struct SceneRecord {
  EntityId scene = 0;
  IdSet observed;
  IdSet masked;

  friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

// Throws DataError on an empty label.
KnowledgeGraph build_graph(std::span<const LabelTriple> triples);

// <s, includes, e> and <e, type, c>  =>  <s, out_relation, c>.
// Non-destructive and idempotent. Throws DataError on unknown relation ids.
KnowledgeGraph reify_includes_type(const KnowledgeGraph& g, RelationId includes_rel,
                                   RelationId type_rel, std::string_view out_rel_label);

// One record per distinct head of `includes_type_rel`, in first-appearance
// order of the head among the triples. Absent relation yields {}.
std::vector<SceneRecord> extract_scenes(const KnowledgeGraph& g, RelationId includes_type_rel);

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct SplitResult {
  std::vector<SceneRecord> train;
  std::vector<SceneRecord> valid;
  std::vector<SceneRecord> test;
  // Valid/test scenes with fewer than two observed types; emitted unmasked.
  std::vector<EntityId> unmaskable;
};

// Deterministic shuffle by seed, then leave-k-out masking of valid/test scenes
// (always keeping at least one observed type).
SplitResult split_and_mask(std::span<const SceneRecord> scenes, const SplitRatios& ratios,
                           std::size_t k_mask, std::uint64_t seed);

}  // namespace kep
