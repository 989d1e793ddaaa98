#pragma once
// Synthetic scene generator with planted co-occurrence structure.
//
// Each scene draws an archetype a ~ prior, includes type v with probability
// inclusion(a, v), then flips every inclusion independently with probability
// `noise`. Scenes with fewer than two types are redrawn. Because the model is
// known, the Bayes-optimal prediction of a masked type is exactly computable.

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kep/graph.hpp"
#include "kep/types.hpp"

namespace kep {

inline constexpr const char* kIncludesRelation = "includes";
inline constexpr const char* kTypeRelation = "type";
inline constexpr const char* kIncludesTypeRelation = "includesType";

struct GeneratorConfig {
  std::size_t n_archetypes = 5;
  std::size_t vocab_size = 12;
  Eigen::MatrixXd inclusion;  // n_archetypes x vocab_size
  Eigen::VectorXd prior;      // n_archetypes, sums to 1
  double noise = 0.1;
  std::size_t n_scenes = 2000;
  std::uint64_t seed = 42;

  // Type v belongs to block v * A / V; in-block entries get `in_block`, the
  // rest `off_block`. Uniform prior.
  static GeneratorConfig block_diagonal(std::size_t archetypes, std::size_t vocab, double in_block,
                                        double off_block, double noise, std::size_t scenes,
                                        std::uint64_t seed);
  // A=5, V=12, in-block 0.8, off-block 0.05, noise 0.1, 2000 scenes, seed 42.
  static GeneratorConfig defaults();

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  // Probability that type v ends up in a scene of archetype a (after noise).
  double included_probability(Eigen::Index a, Eigen::Index v) const {
    const double p = inclusion(a, v);
    return p * (1.0 - noise) + (1.0 - p) * noise;
  }
};

// key=value lines ('#' comments). Keys: archetypes, vocab_size, in_block,
// off_block, noise, scenes, seed, prior (comma list), inclusion (rows joined by
// ';', entries by ','). Unknown keys are rejected.
GeneratorConfig parse_generator_config(std::istream& in);
std::string to_text(const GeneratorConfig& config);

std::string type_label(std::size_t v);
std::string scene_label(std::size_t i);

struct SyntheticData {
  std::vector<LabelTriple> triples;  // scene-includes-instance, instance-type-type
  KnowledgeGraph graph;              // build_graph(triples)
  std::vector<SceneRecord> scenes;   // ids in `graph`, nothing masked
  std::vector<std::size_t> archetypes;
  std::vector<std::optional<EntityId>> type_ids;  // type index -> id, if present

  std::optional<std::size_t> type_index(EntityId id) const;
};

SyntheticData generate(const GeneratorConfig& config);

struct OracleResult {
  std::size_t best = 0;            // type index
  std::vector<double> posterior;  // over type indices; zero on observed types
};

// Exact posterior of the single masked type given the observed type indices.
OracleResult bayes_optimal_top1(const GeneratorConfig& config, std::span<const std::size_t> observed);

}  // namespace kep
