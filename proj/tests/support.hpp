#pragma once
// Hand-rolled generators and slow reference implementations shared by the
// unit and acceptance tests. Nothing here calls into the library's fast
// paths; oracles are written from the definitions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

#include "kep/graph.hpp"
#include "kep/kge.hpp"
#include "kep/pipeline.hpp"
#include "kep/syngen.hpp"
#include "kep/types.hpp"

namespace kep::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  std::vector<double> reals(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = real(lo, hi);
    return v;
  }

  std::string bytes(std::size_t max_len) {
    std::string s(index(max_len + 1), '\0');
    for (auto& c : s) c = static_cast<char>(integer(0, 255));
    return s;
  }

  // Bytes drawn mostly from the characters a parser cares about.
  std::string structured(std::size_t max_len, const std::string& alphabet) {
    std::string s(index(max_len + 1), '\0');
    for (auto& c : s) c = coin(0.9) ? alphabet[index(alphabet.size())] : static_cast<char>(integer(0, 255));
    return s;
  }

  // Raw scene graph: scene -includes-> instance -type-> type, possibly with
  // instances of several types and some noise relations.
  std::vector<LabelTriple> scene_graph(std::size_t scenes, std::size_t types, std::size_t max_objects) {
    std::vector<LabelTriple> out;
    for (std::size_t s = 0; s < scenes; ++s) {
      const std::string scene = "s" + std::to_string(s);
      const std::size_t objects = 1 + index(max_objects);
      for (std::size_t o = 0; o < objects; ++o) {
        const std::string inst = scene + "_e" + std::to_string(o);
        out.push_back({scene, "includes", inst});
        out.push_back({inst, "type", "T" + std::to_string(index(types))});
        if (coin(0.1)) out.push_back({inst, "type", "T" + std::to_string(index(types))});
        if (coin(0.1)) out.push_back({inst, "near", "s" + std::to_string(index(scenes))});
      }
      if (coin(0.05)) out.push_back({scene, "includes", "dangling" + std::to_string(s)});
    }
    return out;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Scoring, written as plain loops from the definitions.

inline double naive_transe(const std::vector<double>& h, const std::vector<double>& r,
                           const std::vector<double>& t, bool l1) {
  double acc = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double u = h[i] + r[i] - t[i];
    acc += l1 ? std::abs(u) : u * u;
  }
  return l1 ? -acc : -std::sqrt(acc);
}

inline double naive_hole(const std::vector<double>& h, const std::vector<double>& r,
                         const std::vector<double>& t) {
  const std::size_t d = h.size();
  double score = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double corr = 0.0;
    for (std::size_t i = 0; i < d; ++i) corr += h[i] * t[(i + k) % d];
    score += r[k] * corr;
  }
  return score;
}

// filters: tau rows of 3; weights: tau*d, filter-major.
inline double naive_convkb(const std::vector<double>& h, const std::vector<double>& r,
                           const std::vector<double>& t, const std::vector<double>& filters,
                           const std::vector<double>& weights) {
  const std::size_t d = h.size();
  const std::size_t tau = filters.size() / 3;
  double score = 0.0;
  for (std::size_t f = 0; f < tau; ++f)
    for (std::size_t row = 0; row < d; ++row) {
      double v = 0.0;
      const double column[3] = {h[row], r[row], t[row]};
      for (std::size_t c = 0; c < 3; ++c) v += filters[f * 3 + c] * column[c];
      score += weights[f * d + row] * std::max(0.0, v);
    }
  return score;
}

// ---------------------------------------------------------------------------
// Graph oracles over labels.

using LabelKey = std::tuple<std::string, std::string, std::string>;

inline std::set<LabelKey> label_set(const std::vector<LabelTriple>& triples) {
  std::set<LabelKey> out;
  for (const auto& t : triples) out.emplace(t.head, t.relation, t.tail);
  return out;
}

// (scene, type) pairs from a nested loop over all triple pairs.
inline std::set<std::pair<std::string, std::string>> nested_loop_join(const std::vector<LabelTriple>& triples,
                                                                      const std::string& includes,
                                                                      const std::string& type) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& a : triples) {
    if (a.relation != includes) continue;
    for (const auto& b : triples)
      if (b.relation == type && b.head == a.tail) out.emplace(a.head, b.tail);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Itemsets.

using Items = std::vector<EntityId>;

inline std::uint64_t count_containing(const std::vector<Items>& txns, const Items& set) {
  std::uint64_t n = 0;
  for (const auto& t : txns) {
    bool all = true;
    for (EntityId x : set) all = all && std::find(t.begin(), t.end(), x) != t.end();
    n += all;
  }
  return n;
}

// Every non-empty subset of `vocab` whose count reaches the threshold, where
// count/N >= num/den is tested by cross multiplication.
inline std::map<Items, std::uint64_t> powerset_frequent(const std::vector<Items>& txns, const Items& vocab,
                                                        std::uint64_t num, std::uint64_t den) {
  std::map<Items, std::uint64_t> out;
  const std::size_t n = vocab.size();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    Items set;
    for (std::size_t k = 0; k < n; ++k)
      if ((mask >> k) & 1) set.push_back(vocab[k]);
    const std::uint64_t c = count_containing(txns, set);
    if (c * den >= num * txns.size()) out.emplace(set, c);
  }
  return out;
}

struct BruteRule {
  Items antecedent, consequent;
  std::uint64_t joint, ante;
  auto operator<=>(const BruteRule&) const = default;
};

inline std::set<BruteRule> brute_rules(const std::map<Items, std::uint64_t>& frequent, const std::vector<Items>& txns,
                                       std::uint64_t num, std::uint64_t den) {
  std::set<BruteRule> out;
  for (const auto& [set, joint] : frequent) {
    if (set.size() < 2) continue;
    for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << set.size()); ++mask) {
      Items a, c;
      for (std::size_t k = 0; k < set.size(); ++k) ((mask >> k) & 1 ? a : c).push_back(set[k]);
      const std::uint64_t ante = count_containing(txns, a);
      if (joint * den >= num * ante) out.insert({a, c, joint, ante});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classification metrics from an explicit confusion matrix.

struct ConfusionOracle {
  double accuracy = 0, macro_f1 = 0;
  std::map<EntityId, double> f1;
};

inline ConfusionOracle confusion_oracle(const std::vector<std::pair<std::optional<EntityId>, EntityId>>& preds) {
  std::set<EntityId> classes;
  for (const auto& [p, t] : preds) {
    classes.insert(t);
    if (p) classes.insert(*p);
  }
  std::map<std::pair<EntityId, EntityId>, double> cm;  // (truth, predicted)
  for (const auto& [p, t] : preds)
    if (p) cm[{t, *p}] += 1;
  ConfusionOracle o;
  double correct = 0;
  for (EntityId c : classes) correct += cm[{c, c}];
  o.accuracy = 100.0 * correct / static_cast<double>(preds.size());
  for (EntityId c : classes) {
    double col = 0, row = 0;
    for (EntityId x : classes) {
      col += cm[{x, c}];
    }
    for (const auto& [p, t] : preds) row += (t == c);
    const double tp = cm[{c, c}];
    const double prec = col > 0 ? tp / col : 0.0;
    const double rec = row > 0 ? tp / row : 0.0;
    o.f1[c] = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    o.macro_f1 += o.f1[c];
  }
  o.macro_f1 /= static_cast<double>(classes.size());
  return o;
}


// ---------------------------------------------------------------------------
// Central finite differences against the analytic margin-loss gradient on a
// small random model. Pairs that sit within `guard` of a kink (hinge, relu,
// L1 sign, L2 origin) are dropped so the loss is smooth over the step.

struct GradCheck {
  double max_rel = 0.0;
  std::size_t checked = 0;  // parameters compared
  std::size_t pairs = 0;    // pairs kept
};

inline bool near_kink(const EmbeddingModel<double>& m, const Triple& x, double guard) {
  const auto h = m.entity(x.head);
  const auto r = m.relation(x.relation);
  const auto t = m.entity(x.tail);
  switch (m.kind) {
    case ModelKind::kTransE: {
      const Eigen::VectorXd u = h + r - t;
      return m.norm == NormKind::kL1 ? u.cwiseAbs().minCoeff() < guard : u.norm() < guard;
    }
    case ModelKind::kHolE:
      return false;
    case ModelKind::kConvKB:
      for (Eigen::Index f = 0; f < m.num_filters(); ++f) {
        const Eigen::VectorXd pre = m.filters(f, 0) * h + m.filters(f, 1) * r + m.filters(f, 2) * t;
        if (pre.cwiseAbs().minCoeff() < guard) return true;
      }
      return false;
  }
  return false;
}

inline GradCheck gradient_check(ModelKind kind, NormKind norm, std::uint64_t seed, double step = 1e-5) {
  Gen gen(seed);
  const int n = 7, rels = 2, d = 6, tau = 3;
  auto m = EmbeddingModel<double>::zeros(kind, n, rels, d, kind == ModelKind::kConvKB ? tau : 0);
  m.norm = norm;
  for (auto* block : {&m.entities, &m.relations, &m.filters})
    for (Eigen::Index i = 0; i < block->size(); ++i) block->data()[i] = gen.real(-1, 1);
  for (Eigen::Index i = 0; i < m.weights.size(); ++i) m.weights[i] = gen.real(-1, 1);

  const double margin = 1.0, guard = 1e-3;
  auto random_triple = [&] {
    return Triple{static_cast<EntityId>(gen.index(n)), static_cast<RelationId>(gen.index(rels)),
                  static_cast<EntityId>(gen.index(n))};
  };
  std::vector<TriplePair> pairs;
  for (int i = 0; i < 12; ++i) {
    const TriplePair p{random_triple(), random_triple()};
    const double term = margin - score(m, p.positive) + score(m, p.negative);
    if (std::abs(term) < guard || near_kink(m, p.positive, guard) || near_kink(m, p.negative, guard))
      continue;
    pairs.push_back(p);
  }

  GradientBuffer<double> grad(m);
  margin_loss<double>(m, pairs, margin, &grad);

  GradCheck out;
  out.pairs = pairs.size();
  auto compare = [&](double* param, double analytic) {
    const double keep = *param;
    *param = keep + step;
    const double up = margin_loss<double>(m, pairs, margin);
    *param = keep - step;
    const double down = margin_loss<double>(m, pairs, margin);
    *param = keep;
    const double fd = (up - down) / (2 * step);
    // unit floor: gradients that are exactly zero compare absolutely
    const double rel = std::abs(fd - analytic) / std::max(1.0, std::abs(fd) + std::abs(analytic));
    out.max_rel = std::max(out.max_rel, rel);
    ++out.checked;
  };
  for (Eigen::Index i = 0; i < m.entities.size(); ++i) compare(m.entities.data() + i, grad.entities.data()[i]);
  for (Eigen::Index i = 0; i < m.relations.size(); ++i) compare(m.relations.data() + i, grad.relations.data()[i]);
  for (Eigen::Index i = 0; i < m.filters.size(); ++i) compare(m.filters.data() + i, grad.filters.data()[i]);
  for (Eigen::Index i = 0; i < m.weights.size(); ++i) compare(m.weights.data() + i, grad.weights[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Filtered ranking fixture: one scene, ten candidate types, three of which
// are known tails of (scene, includesType). Scores come from a random HolE
// model.

struct FilterFixture {
  KnowledgeGraph graph;
  EmbeddingModel<double> model;
  RelationId relation = 0;
  EntityId scene = 0;
  IdSet candidates;
  IdSet known;  // true tails of the scene
};

inline FilterFixture filter_fixture(std::uint64_t seed) {
  FilterFixture f;
  GraphBuilder b;
  f.scene = b.add_entity("scene");
  f.relation = b.add_relation("includesType");
  for (int i = 0; i < 10; ++i) f.candidates.push_back(b.add_entity("T" + std::to_string(i)));
  f.known = {f.candidates[2], f.candidates[5], f.candidates[7]};
  for (EntityId k : f.known) b.add(Triple{f.scene, f.relation, k});
  f.graph = std::move(b).build();

  Gen gen(seed);
  f.model = EmbeddingModel<double>::zeros(ModelKind::kHolE, 11, 1, 8);
  for (Eigen::Index i = 0; i < f.model.entities.size(); ++i) f.model.entities.data()[i] = gen.real(-1, 1);
  for (Eigen::Index i = 0; i < f.model.relations.size(); ++i) f.model.relations.data()[i] = gen.real(-1, 1);
  return f;
}

// ---------------------------------------------------------------------------
// Generated scenes -> reified graph -> split dataset, as the CLI does it.

struct SyntheticDataset {
  SyntheticData data;
  Dataset dataset;
  SplitResult split;
};

inline SyntheticDataset synthetic_dataset(const GeneratorConfig& config, std::uint64_t split_seed,
                                          std::size_t k_mask = 1) {
  SyntheticDataset out;
  out.data = generate(config);
  const auto& g = out.data.graph;
  auto reified = reify_includes_type(g, *g.relation(kIncludesRelation), *g.relation(kTypeRelation),
                                     kIncludesTypeRelation);
  const auto scenes = extract_scenes(reified, *reified.relation(kIncludesTypeRelation));
  out.split = split_and_mask(scenes, {0.8, 0.1, 0.1}, k_mask, split_seed);
  out.dataset = make_dataset(std::move(reified), out.split.train, out.split.valid, out.split.test);
  return out;
}

// ---------------------------------------------------------------------------

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("kep_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace kep::testing
