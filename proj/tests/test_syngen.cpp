#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <sstream>

#include "kep/io.hpp"
#include "kep/syngen.hpp"
#include "support.hpp"

namespace kep {
namespace {

using testing::Gen;

std::vector<std::size_t> type_indices(const SyntheticData& d, const SceneRecord& s) {
  std::vector<std::size_t> out;
  for (EntityId e : s.observed) out.push_back(*d.type_index(e));
  return out;
}

TEST(Syngen, NoNoiseAllOnesGivesEveryType) {
  auto c = GeneratorConfig::block_diagonal(1, 6, 1.0, 1.0, 0.0, 50, 3);
  const auto d = generate(c);
  ASSERT_EQ(d.scenes.size(), 50u);
  for (const auto& s : d.scenes) EXPECT_EQ(s.observed.size(), 6u);
}

TEST(Syngen, DisjointBlocksNeverMix) {
  auto c = GeneratorConfig::block_diagonal(2, 8, 0.7, 0.0, 0.0, 300, 5);
  const auto d = generate(c);
  for (std::size_t i = 0; i < d.scenes.size(); ++i) {
    std::set<std::size_t> blocks;
    for (std::size_t v : type_indices(d, d.scenes[i])) blocks.insert(v * 2 / 8);
    EXPECT_EQ(blocks.size(), 1u);
    EXPECT_EQ(*blocks.begin(), d.archetypes[i]);
  }
}

TEST(Syngen, GraphShape) {
  const auto d = generate(GeneratorConfig::block_diagonal(3, 6, 0.8, 0.1, 0.05, 40, 1));
  EXPECT_EQ(d.graph.num_relations(), 2u);
  for (const auto& s : d.scenes) EXPECT_GE(s.observed.size(), 2u);
  const auto reified = reify_includes_type(d.graph, *d.graph.relation(kIncludesRelation),
                                           *d.graph.relation(kTypeRelation), kIncludesTypeRelation);
  EXPECT_EQ(extract_scenes(reified, *reified.relation(kIncludesTypeRelation)), d.scenes);
}

// P(v in scene | accepted) = sum_a pi_a q_av P(|rest| >= 1 | a) / sum_a pi_a P(|S| >= 2 | a)
TEST(Syngen, TypeFrequenciesMatchClosedForm) {
  const auto c = GeneratorConfig::defaults();
  const auto d = generate(c);
  const auto A = static_cast<Eigen::Index>(c.n_archetypes);
  const auto V = static_cast<Eigen::Index>(c.vocab_size);

  // P(|S| >= 2 | a) via the Poisson-binomial distribution of the scene size
  std::vector<double> accept(static_cast<std::size_t>(A));
  for (Eigen::Index a = 0; a < A; ++a) {
    std::vector<double> size_dist = {1.0};
    for (Eigen::Index v = 0; v < V; ++v) {
      const double q = c.included_probability(a, v);
      std::vector<double> next(size_dist.size() + 1, 0.0);
      for (std::size_t k = 0; k < size_dist.size(); ++k) {
        next[k] += size_dist[k] * (1 - q);
        next[k + 1] += size_dist[k] * q;
      }
      size_dist = next;
    }
    accept[static_cast<std::size_t>(a)] = 1.0 - size_dist[0] - size_dist[1];
  }
  double z = 0.0;
  for (Eigen::Index a = 0; a < A; ++a) z += c.prior[a] * accept[static_cast<std::size_t>(a)];

  for (Eigen::Index v = 0; v < V; ++v) {
    double num = 0.0;
    for (Eigen::Index a = 0; a < A; ++a) {
      double none_else = 1.0;
      for (Eigen::Index u = 0; u < V; ++u)
        if (u != v) none_else *= 1.0 - c.included_probability(a, u);
      num += c.prior[a] * c.included_probability(a, v) * (1.0 - none_else);
    }
    std::size_t hits = 0;
    for (const auto& s : d.scenes) hits += s.observed.size() && set_contains(s.observed, *d.type_ids[static_cast<std::size_t>(v)]);
    EXPECT_NEAR(static_cast<double>(hits) / static_cast<double>(d.scenes.size()), num / z, 0.03) << "type " << v;
  }
}

TEST(Syngen, SameSeedSameBytes) {
  const auto c = GeneratorConfig::block_diagonal(4, 9, 0.7, 0.05, 0.1, 300, 11);
  const auto a = generate(c), b = generate(c);
  std::ostringstream ta, tb;
  write_triples(a.triples, ta);
  write_triples(b.triples, tb);
  EXPECT_EQ(ta.str(), tb.str());
  auto other = c;
  other.seed = 12;
  std::ostringstream tc;
  write_triples(generate(other).triples, tc);
  EXPECT_NE(ta.str(), tc.str());
}

TEST(Syngen, InvalidConfigNamesTheField) {
  auto c = GeneratorConfig::defaults();
  c.noise = 0.7;
  try {
    c.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_EQ(std::string(e.what()).rfind("noise", 0), 0u);
  }
  c = GeneratorConfig::defaults();
  c.prior[0] = 0.9;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  std::istringstream unknown("speed=3\n");
  EXPECT_THROW(parse_generator_config(unknown), std::invalid_argument);
}

TEST(Syngen, ConfigTextRoundTrip) {
  auto c = GeneratorConfig::block_diagonal(3, 7, 0.65, 0.02, 0.15, 123, 9);
  c.prior << 0.5, 0.25, 0.25;
  std::istringstream in(to_text(c));
  const auto back = parse_generator_config(in);
  EXPECT_EQ(back.n_archetypes, 3u);
  EXPECT_EQ(back.vocab_size, 7u);
  EXPECT_EQ(back.n_scenes, 123u);
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.noise, 0.15);
  EXPECT_EQ(back.prior, c.prior);
  EXPECT_EQ(back.inclusion, c.inclusion);
}

TEST(Labels, Format) {
  EXPECT_EQ(type_label(3), "Type03");
  EXPECT_EQ(scene_label(42), "scene00042");
}

// ---------------------------------------------------------------------------

TEST(Oracle, PosteriorIsADistribution) {
  const auto c = GeneratorConfig::defaults();
  Gen gen(4);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::size_t> obs;
    for (std::size_t v = 0; v < 12; ++v)
      if (gen.coin(0.25)) obs.push_back(v);
    const auto r = bayes_optimal_top1(c, obs);
    ASSERT_EQ(r.posterior.size(), 12u);
    EXPECT_NEAR(std::accumulate(r.posterior.begin(), r.posterior.end(), 0.0), 1.0, 1e-9);
    for (std::size_t v : obs) EXPECT_EQ(r.posterior[v], 0.0);
    EXPECT_EQ(r.best, static_cast<std::size_t>(std::max_element(r.posterior.begin(), r.posterior.end()) -
                                               r.posterior.begin()));
  }
  const std::vector<std::size_t> bad = {12};
  EXPECT_THROW(bayes_optimal_top1(c, bad), std::out_of_range);
}

TEST(Oracle, SingleArchetypeIsProportionalToInclusion) {
  auto c = GeneratorConfig::block_diagonal(1, 5, 0.5, 0.5, 0.1, 10, 1);
  c.inclusion << 0.9, 0.2, 0.6, 0.4, 0.3;
  const std::vector<std::size_t> obs = {0};
  const auto r = bayes_optimal_top1(c, obs);
  // odds of v being the extra type: q_v / (1 - q_v), normalised
  std::vector<double> w(5, 0.0);
  double total = 0;
  for (Eigen::Index v = 1; v < 5; ++v) {
    const double q = c.included_probability(0, v);
    w[static_cast<std::size_t>(v)] = q / (1 - q);
    total += w[static_cast<std::size_t>(v)];
  }
  for (std::size_t v = 0; v < 5; ++v) EXPECT_NEAR(r.posterior[v], w[v] / total, 1e-12);
  EXPECT_EQ(r.best, 2u);
}

TEST(Oracle, DisjointBlocksPickTheBestInBlockType) {
  auto c = GeneratorConfig::block_diagonal(2, 6, 0.5, 0.0, 0.0, 10, 1);
  c.inclusion << 0.6, 0.3, 0.9, 0, 0, 0,  //
      0, 0, 0, 0.4, 0.8, 0.5;
  const std::vector<std::size_t> obs = {3};
  EXPECT_EQ(bayes_optimal_top1(c, obs).best, 4u);
  const std::vector<std::size_t> obs2 = {0, 2};
  EXPECT_EQ(bayes_optimal_top1(c, obs2).best, 1u);
}

}  // namespace
}  // namespace kep
