#pragma once
// Collective classification of a scene's unobserved entity slots from its
// observed types, via the iterative classification algorithm over a
// naive co-occurrence scorer.

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kep/graph.hpp"
#include "kep/types.hpp"

namespace kep {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

// pair_counts is symmetric with a zero diagonal; label_counts[l] <= n_scenes.
struct CooccurrenceModel {
  IdSet labels;  // label index -> entity-type id
  CountMatrix pair_counts;
  CountVector label_counts;
  std::int64_t n_scenes = 0;
  double alpha = 1.0;

  Eigen::Index vocab_size() const { return static_cast<Eigen::Index>(labels.size()); }
  std::optional<Eigen::Index> index_of(EntityId id) const;
};

// Counts over the observed sets of `train`. The label domain is `vocabulary`
// when given, otherwise every type seen in training.
CooccurrenceModel train_cc(std::span<const SceneRecord> train, double alpha,
                           const IdSet* vocabulary = nullptr);

// score(l) = log((c_l + a) / (N + a L)) + sum_{o in evidence} log((c_lo + a) / (c_l + a L))
// for every label outside the evidence. Evidence outside the domain is ignored.
RankedPrediction score_labels(const CooccurrenceModel& model, const IdSet& evidence);

struct IterativeResult {
  RankedPrediction ranking;
  std::vector<EntityId> assignment;  // pseudo-label per slot
  std::size_t iterations = 0;        // full passes over the slots
  // Sum over slots of the assigned label's score given the other slots, after
  // initialisation and after every pass.
  std::vector<double> pseudo_likelihood;
};

IterativeResult predict_cc_iterative(const CooccurrenceModel& model, const IdSet& observed,
                                     std::size_t n_slots, std::size_t max_iters);

}  // namespace kep
