#pragma once
// Ranking metrics (MRR, Hits@K), KEP classification metrics (accuracy,
// micro/macro F1) and the per-query evaluation loop shared by all solvers.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kep/graph.hpp"
#include "kep/types.hpp"

namespace kep {

inline constexpr std::size_t kDefaultHits[] = {1, 3, 10};

// Anything that ranks candidate entity types for a scene.
class Solver {
 public:
  virtual ~Solver() = default;
  virtual std::string name() const = 0;
  // Best-first; may be partial or empty.
  virtual RankedPrediction rank(const SceneRecord& scene) const = 0;
};

// Scores every candidate with a hash of (seed, scene, candidate).
class RandomSolver : public Solver {
 public:
  RandomSolver(IdSet candidates, std::uint64_t seed)
      : candidates_(std::move(candidates)), seed_(seed) {}
  std::string name() const override { return "random"; }
  RankedPrediction rank(const SceneRecord& scene) const override;

 private:
  IdSet candidates_;
  std::uint64_t seed_;
};

struct RankingMetrics {
  double mrr = 0.0;
  std::map<std::size_t, double> hits;  // K -> fraction of ranks <= K
};

// Throws std::invalid_argument on an empty list or a zero rank.
RankingMetrics ranking_metrics(std::span<const std::size_t> ranks,
                               std::span<const std::size_t> ks = kDefaultHits);

struct ClassStats {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;  // 0 when the class has no true instances
  double f1 = 0.0;
};

struct KepMetrics {
  double accuracy = 0.0;  // percent
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::map<EntityId, ClassStats> per_class;
};

struct Prediction {
  std::optional<EntityId> predicted;  // top-1; empty when the solver had nothing
  EntityId truth = 0;
};

// Single-label multi-class scoring. Classes with neither true nor predicted
// instances do not exist in the table; predicted-only classes get F1 = 0.
KepMetrics kep_metrics(std::span<const Prediction> predictions);

struct EvalReport {
  std::string solver;
  std::size_t n_queries = 0;
  std::size_t n_empty = 0;  // queries where the solver returned nothing
  RankingMetrics ranking;
  KepMetrics kep;
  std::vector<std::size_t> ranks;  // per query, in query order
  double wall_ms = 0.0;
  std::string fingerprint;
};

// One query per (scene, masked type). The true type is ranked among
// `candidates` after removing the scene's other known types (observed, other
// masked, and any (scene, relation, t) in `known`). Ties count against the
// true type. An empty solver ranking yields rank |candidates| + 1.
// Throws std::invalid_argument when a scene has no masked type.
EvalReport evaluate_solver(const Solver& solver, std::span<const SceneRecord> test,
                           const KnowledgeGraph& known, RelationId relation,
                           std::span<const EntityId> candidates,
                           std::span<const std::size_t> ks = kDefaultHits);

nlohmann::ordered_json to_json(const EvalReport& report, const Vocabulary& nodes);
// Plain-text summary; `per_class` adds the precision/recall table.
std::string to_table(const EvalReport& report, const Vocabulary& nodes, bool per_class = true);

}  // namespace kep
