#pragma once
// Glue between the solver modules and the evaluation harness: solver
// adapters, training-graph construction, repeated experiments and config
// fingerprints. The CLI is a thin layer over this header.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kep/arm.hpp"
#include "kep/cc.hpp"
#include "kep/eval.hpp"
#include "kep/graph.hpp"
#include "kep/kge.hpp"

namespace kep {

enum class SolverKind { kTransE, kHolE, kConvKB, kArm, kCc };

std::string to_string(SolverKind kind);
SolverKind parse_solver_kind(std::string_view name);
std::optional<ModelKind> embedding_kind(SolverKind kind);

// Relation labels of the raw scene graph.
struct GraphSchema {
  std::string includes = "includes";
  std::string type = "type";
  std::string includes_type = "includesType";
};

struct SolverParams {
  TrainConfig kge;  // kind is overwritten from the solver
  Rational min_support{1, 20};
  Rational min_confidence{1, 2};
  double alpha = 1.0;
  std::size_t cc_slots = 1;
  std::size_t cc_max_iters = 10;
  // Add every non-includesType triple of the graph to the KGE training data
  // (minus includes edges that would reveal a masked type).
  bool full_graph = false;
};

// Canonical key=value text of everything that affects a run except the seed.
std::string describe(SolverKind kind, const SolverParams& params);

// FNV-1a 64 of `text`, as 16 hex digits.
std::string fingerprint(std::string_view text);

// A reified graph with its scene split.
struct Dataset {
  KnowledgeGraph graph;
  RelationId relation = 0;  // includesType
  IdSet candidates;         // tail vocabulary of `relation`
  std::vector<SceneRecord> train;
  std::vector<SceneRecord> valid;
  std::vector<SceneRecord> test;
  GraphSchema schema;
};

// Throws DataError when the graph lacks the includesType relation.
Dataset make_dataset(KnowledgeGraph reified, std::vector<SceneRecord> train,
                     std::vector<SceneRecord> valid, std::vector<SceneRecord> test,
                     GraphSchema schema = {});

// Positives seen by the embedding solvers: (s, includesType, t) for every
// train type and every observed valid/test type. Vocabulary matches d.graph.
KnowledgeGraph kge_training_graph(const Dataset& d, bool full_graph);

// Co-occurrence and rule solvers learn from the observed sets of train scenes.
std::vector<Itemset> transactions(std::span<const SceneRecord> scenes);

class KgeSolver : public Solver {
 public:
  KgeSolver(EmbeddingModel<float> model, RelationId relation, IdSet candidates)
      : model_(std::move(model)), relation_(relation), candidates_(std::move(candidates)) {}
  std::string name() const override { return to_string(model_.kind); }
  RankedPrediction rank(const SceneRecord& scene) const override;
  const EmbeddingModel<float>& model() const { return model_; }

 private:
  EmbeddingModel<float> model_;
  RelationId relation_;
  IdSet candidates_;
};

class ArmSolver : public Solver {
 public:
  explicit ArmSolver(RuleSet rules) : rules_(std::move(rules)) {}
  std::string name() const override { return "arm"; }
  RankedPrediction rank(const SceneRecord& scene) const override {
    return predict_arm(rules_, scene.observed);
  }
  const RuleSet& rules() const { return rules_; }

 private:
  RuleSet rules_;
};

class CcSolver : public Solver {
 public:
  CcSolver(CooccurrenceModel model, std::size_t n_slots, std::size_t max_iters)
      : model_(std::move(model)), n_slots_(n_slots), max_iters_(max_iters) {}
  std::string name() const override { return "cc"; }
  RankedPrediction rank(const SceneRecord& scene) const override {
    return predict_cc_iterative(model_, scene.observed, n_slots_, max_iters_).ranking;
  }
  const CooccurrenceModel& model() const { return model_; }

 private:
  CooccurrenceModel model_;
  std::size_t n_slots_;
  std::size_t max_iters_;
};

// Trains the requested solver on `d` with `seed`. Epoch progress goes to
// `on_epoch` for the embedding solvers.
std::unique_ptr<Solver> train_solver(const Dataset& d, SolverKind kind, const SolverParams& params,
                                     std::uint64_t seed, const EpochCallback& on_epoch = {});

struct MetricSummary {
  std::vector<double> values;  // one per run
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single run
};

struct ExperimentResult {
  SolverKind solver = SolverKind::kHolE;
  std::string fingerprint;
  std::vector<std::uint64_t> seeds;
  std::vector<EvalReport> runs;
  std::map<std::string, MetricSummary> summary;  // mrr, hits@K, accuracy, micro_f1, macro_f1
};

// Scenes with at least one masked type.
std::vector<SceneRecord> queries(std::span<const SceneRecord> scenes);

// Appends a run and recomputes the summary. The report takes the result's
// fingerprint.
void add_run(ExperimentResult& result, std::uint64_t seed, EvalReport report);

// Trains and evaluates on the masked scenes of d.test once per seed in [seed, seed + repeats).
ExperimentResult run_experiment(const Dataset& d, SolverKind kind, const SolverParams& params,
                                std::uint64_t seed, std::size_t repeats,
                                std::span<const std::size_t> ks = kDefaultHits,
                                const EpochCallback& on_epoch = {});

MetricSummary summarize(std::vector<double> values);
// "0.93 ± 0.01"
std::string format_mean_std(const MetricSummary& s, int precision = 2);

nlohmann::ordered_json to_json(const ExperimentResult& result, const Vocabulary& nodes);
// One row per metric with mean ± std.
std::string to_table(const ExperimentResult& result);

}  // namespace kep
