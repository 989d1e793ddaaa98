#include "kep/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace kep {

std::uint32_t Vocabulary::intern(std::string_view label) {
  auto it = ids_.find(std::string(label));
  if (it != ids_.end()) return it->second;
  auto id = static_cast<std::uint32_t>(labels_.size());
  labels_.emplace_back(label);
  ids_.emplace(labels_.back(), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view label) const {
  auto it = ids_.find(std::string(label));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::size_t KnowledgeGraph::TripleHash::operator()(const Triple& t) const noexcept {
  // splitmix-style mixing of the three ids
  std::uint64_t x = (static_cast<std::uint64_t>(t.head) << 32) ^ t.tail;
  x ^= static_cast<std::uint64_t>(t.relation) * 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return static_cast<std::size_t>(x ^ (x >> 31));
}

bool KnowledgeGraph::contains(const Triple& t) const { return triple_set_.contains(t); }

std::span<const EntityId> KnowledgeGraph::tails(EntityId head, RelationId relation) const {
  auto it = index_hr_.find(key(head, relation));
  if (it == index_hr_.end()) return {};
  return it->second;
}

std::span<const EntityId> KnowledgeGraph::heads(EntityId tail, RelationId relation) const {
  auto it = index_tr_.find(key(tail, relation));
  if (it == index_tr_.end()) return {};
  return it->second;
}

IdSet KnowledgeGraph::tail_vocabulary(RelationId relation) const {
  IdSet out;
  for (const auto& t : triples_)
    if (t.relation == relation) out.push_back(t.tail);
  normalize_set(out);
  return out;
}

std::vector<LabelTriple> KnowledgeGraph::to_labels() const {
  std::vector<LabelTriple> out;
  out.reserve(triples_.size());
  for (const auto& t : triples_)
    out.push_back({nodes_.label(t.head), relations_.label(t.relation), nodes_.label(t.tail)});
  return out;
}

GraphBuilder::GraphBuilder(const KnowledgeGraph& seed) : graph_(seed) {}

GraphBuilder GraphBuilder::with_vocabulary(const KnowledgeGraph& g) {
  GraphBuilder b;
  b.graph_.nodes_ = g.nodes_;
  b.graph_.relations_ = g.relations_;
  return b;
}

bool GraphBuilder::add(const Triple& t) {
  if (t.head >= graph_.nodes_.size() || t.tail >= graph_.nodes_.size() ||
      t.relation >= graph_.relations_.size())
    throw std::out_of_range("triple references an id outside the vocabulary");
  if (!graph_.triple_set_.insert(t).second) return false;
  graph_.triples_.push_back(t);
  return true;
}

bool GraphBuilder::add(std::string_view head, std::string_view relation, std::string_view tail) {
  if (head.empty() || relation.empty() || tail.empty())
    throw DataError("empty label in triple");
  Triple t;
  t.head = add_entity(head);
  t.relation = add_relation(relation);
  t.tail = add_entity(tail);
  return add(t);
}

KnowledgeGraph GraphBuilder::build() && {
  auto& g = graph_;
  g.index_hr_.clear();
  g.index_tr_.clear();
  for (const auto& t : g.triples_) {
    g.index_hr_[KnowledgeGraph::key(t.head, t.relation)].push_back(t.tail);
    g.index_tr_[KnowledgeGraph::key(t.tail, t.relation)].push_back(t.head);
  }
  for (auto& [k, v] : g.index_hr_) std::sort(v.begin(), v.end());
  for (auto& [k, v] : g.index_tr_) std::sort(v.begin(), v.end());
  return std::move(g);
}

KnowledgeGraph build_graph(std::span<const LabelTriple> triples) {
  GraphBuilder b;
  for (const auto& t : triples) b.add(t.head, t.relation, t.tail);
  return std::move(b).build();
}

KnowledgeGraph reify_includes_type(const KnowledgeGraph& g, RelationId includes_rel,
                                   RelationId type_rel, std::string_view out_rel_label) {
  if (includes_rel >= g.num_relations())
    throw DataError("unknown includes relation id " + std::to_string(includes_rel));
  if (type_rel >= g.num_relations())
    throw DataError("unknown type relation id " + std::to_string(type_rel));

  GraphBuilder b(g);
  const RelationId out = b.add_relation(out_rel_label);
  for (const auto& t : g.triples()) {
    if (t.relation != includes_rel) continue;
    for (EntityId type : g.tails(t.tail, type_rel)) b.add(Triple{t.head, out, type});
  }
  return std::move(b).build();
}

std::vector<SceneRecord> extract_scenes(const KnowledgeGraph& g, RelationId includes_type_rel) {
  std::vector<SceneRecord> scenes;
  if (includes_type_rel >= g.num_relations()) return scenes;
  std::unordered_map<EntityId, std::size_t> slot;
  for (const auto& t : g.triples()) {
    if (t.relation != includes_type_rel) continue;
    auto [it, fresh] = slot.try_emplace(t.head, scenes.size());
    if (fresh) scenes.push_back(SceneRecord{t.head, {}, {}});
    scenes[it->second].observed.push_back(t.tail);
  }
  for (auto& s : scenes) normalize_set(s.observed);
  return scenes;
}

SplitResult split_and_mask(std::span<const SceneRecord> scenes, const SplitRatios& ratios,
                           std::size_t k_mask, std::uint64_t seed) {
  if (k_mask < 1) throw std::invalid_argument("k_mask must be >= 1");
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  const auto n = static_cast<double>(scenes.size());
  auto n_train = static_cast<std::size_t>(std::llround(ratios.train * n));
  auto n_valid = static_cast<std::size_t>(std::llround(ratios.valid * n));
  n_train = std::min(n_train, scenes.size());
  n_valid = std::min(n_valid, scenes.size() - n_train);

  SplitResult out;
  auto mask = [&](SceneRecord s) {
    if (s.observed.size() < 2) {
      out.unmaskable.push_back(s.scene);
      return s;
    }
    const std::size_t k = std::min(k_mask, s.observed.size() - 1);
    // partial Fisher-Yates: the first k slots become the masked types
    IdSet pool = s.observed;
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    s.masked.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    s.observed.assign(pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end());
    normalize_set(s.masked);
    normalize_set(s.observed);
    return s;
  };

  for (std::size_t i = 0; i < order.size(); ++i) {
    SceneRecord s = scenes[order[i]];
    s.observed.insert(s.observed.end(), s.masked.begin(), s.masked.end());
    s.masked.clear();
    normalize_set(s.observed);
    if (i < n_train)
      out.train.push_back(std::move(s));
    else if (i < n_train + n_valid)
      out.valid.push_back(mask(std::move(s)));
    else
      out.test.push_back(mask(std::move(s)));
  }
  return out;
}

}  // namespace kep
