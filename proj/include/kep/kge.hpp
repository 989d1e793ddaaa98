#pragma once
// Knowledge graph embedding link prediction: TransE, HolE and ConvKB scorers,
// tail corruption, margin-ranking SGD and filtered ranking.
//
// Everything is templated on the scalar type. Training runs in double and the
// result is cast to float for storage; gradient checks use double throughout.
//
// Score convention: higher is more plausible for all three kinds.
//   TransE  -||h + r - t||            (L1 or L2)
//   HolE    r . (h * t),  [a * b]_k = sum_i a_i b_{(i+k) mod d}
//   ConvKB  w . concat_f relu(w_f0 h + w_f1 r + w_f2 t)

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kep/graph.hpp"
#include "kep/types.hpp"

namespace kep {

enum class ModelKind { kTransE, kHolE, kConvKB };
enum class NormKind { kL1, kL2 };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);
std::string to_string(NormKind norm);
NormKind parse_norm_kind(std::string_view name);

template <typename Scalar_>
struct EmbeddingModel {
  using Scalar = Scalar_;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  ModelKind kind = ModelKind::kTransE;
  NormKind norm = NormKind::kL2;  // TransE only
  Matrix entities;                // n x d
  Matrix relations;               // m x d
  Matrix filters;                 // tau x 3, ConvKB only
  Vector weights;                 // tau*d, ConvKB only
  std::uint64_t seed = 0;

  static EmbeddingModel zeros(ModelKind kind, Eigen::Index n, Eigen::Index m, Eigen::Index d,
                              Eigen::Index tau = 0) {
    EmbeddingModel model;
    model.kind = kind;
    model.entities = Matrix::Zero(n, d);
    model.relations = Matrix::Zero(m, d);
    if (kind == ModelKind::kConvKB) {
      model.filters = Matrix::Zero(tau, 3);
      model.weights = Vector::Zero(tau * d);
    }
    return model;
  }

  Eigen::Index dim() const { return entities.cols(); }
  Eigen::Index num_entities() const { return entities.rows(); }
  Eigen::Index num_relations() const { return relations.rows(); }
  Eigen::Index num_filters() const { return filters.rows(); }

  auto entity(EntityId id) const { return entities.row(id).transpose(); }
  auto relation(RelationId id) const { return relations.row(id).transpose(); }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(entities.size() + relations.size() + filters.size() +
                                    weights.size());
  }
  std::size_t parameter_bytes() const { return parameter_count() * sizeof(Scalar); }

  bool all_finite() const {
    return entities.allFinite() && relations.allFinite() && filters.allFinite() &&
           weights.allFinite();
  }

  template <typename To>
  EmbeddingModel<To> cast() const {
    EmbeddingModel<To> out;
    out.kind = kind;
    out.norm = norm;
    out.entities = entities.template cast<To>();
    out.relations = relations.template cast<To>();
    out.filters = filters.template cast<To>();
    out.weights = weights.template cast<To>();
    out.seed = seed;
    return out;
  }
};

// ---------------------------------------------------------------------------
// Vector-level scoring kernels.

template <typename H, typename R, typename T>
typename H::Scalar transe_score(const Eigen::MatrixBase<H>& h, const Eigen::MatrixBase<R>& r,
                                const Eigen::MatrixBase<T>& t, NormKind norm) {
  if (norm == NormKind::kL1) return -(h + r - t).template lpNorm<1>();
  return -(h + r - t).norm();
}

// [a * b]_k = sum_i a_i b_{(i+k) mod d}, split into two contiguous dot products.
template <typename A, typename B>
Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, 1> circular_correlation(
    const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  const Eigen::Index d = a.size();
  Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, 1> out(d);
  for (Eigen::Index k = 0; k < d; ++k)
    out[k] = a.head(d - k).dot(b.tail(d - k)) + a.tail(k).dot(b.head(k));
  return out;
}

template <typename H, typename R, typename T>
typename H::Scalar hole_score(const Eigen::MatrixBase<H>& h, const Eigen::MatrixBase<R>& r,
                              const Eigen::MatrixBase<T>& t) {
  return r.dot(circular_correlation(h, t));
}

template <typename H, typename R, typename T, typename F, typename W>
typename H::Scalar convkb_score(const Eigen::MatrixBase<H>& h, const Eigen::MatrixBase<R>& r,
                                const Eigen::MatrixBase<T>& t, const Eigen::MatrixBase<F>& filters,
                                const Eigen::MatrixBase<W>& weights) {
  using Scalar = typename H::Scalar;
  const Eigen::Index d = h.size();
  Scalar total(0);
  for (Eigen::Index f = 0; f < filters.rows(); ++f) {
    auto act = (filters(f, 0) * h.array() + filters(f, 1) * r.array() + filters(f, 2) * t.array())
                   .cwiseMax(Scalar(0));
    total += (act * weights.segment(f * d, d).array()).sum();
  }
  return total;
}

// ---------------------------------------------------------------------------
// Model-level scoring with id validation.

namespace detail {
template <typename Scalar>
void check_ids(const EmbeddingModel<Scalar>& m, EntityId h, RelationId r, EntityId t) {
  if (h >= m.num_entities() || t >= m.num_entities())
    throw std::out_of_range("entity id out of range");
  if (r >= m.num_relations()) throw std::out_of_range("relation id out of range");
}
}  // namespace detail

template <typename Scalar>
Scalar score_transe(const EmbeddingModel<Scalar>& m, EntityId h, RelationId r, EntityId t) {
  detail::check_ids(m, h, r, t);
  return transe_score(m.entity(h), m.relation(r), m.entity(t), m.norm);
}

template <typename Scalar>
Scalar score_hole(const EmbeddingModel<Scalar>& m, EntityId h, RelationId r, EntityId t) {
  detail::check_ids(m, h, r, t);
  return hole_score(m.entity(h), m.relation(r), m.entity(t));
}

template <typename Scalar>
Scalar score_convkb(const EmbeddingModel<Scalar>& m, EntityId h, RelationId r, EntityId t) {
  detail::check_ids(m, h, r, t);
  return convkb_score(m.entity(h), m.relation(r), m.entity(t), m.filters, m.weights);
}

template <typename Scalar>
Scalar score(const EmbeddingModel<Scalar>& m, const Triple& x) {
  switch (m.kind) {
    case ModelKind::kTransE:
      return score_transe(m, x.head, x.relation, x.tail);
    case ModelKind::kHolE:
      return score_hole(m, x.head, x.relation, x.tail);
    case ModelKind::kConvKB:
      return score_convkb(m, x.head, x.relation, x.tail);
  }
  return Scalar(0);
}

// ---------------------------------------------------------------------------
// Gradients.

// Dense gradient storage shaped like the model, with touched-row tracking so
// that clearing and applying cost O(rows touched).
template <typename Scalar>
class GradientBuffer {
 public:
  using Model = EmbeddingModel<Scalar>;
  using Matrix = typename Model::Matrix;
  using Vector = typename Model::Vector;

  explicit GradientBuffer(const Model& m)
      : entities(Matrix::Zero(m.entities.rows(), m.entities.cols())),
        relations(Matrix::Zero(m.relations.rows(), m.relations.cols())),
        filters(Matrix::Zero(m.filters.rows(), m.filters.cols())),
        weights(Vector::Zero(m.weights.size())),
        entity_seen_(static_cast<std::size_t>(m.entities.rows()), 0),
        relation_seen_(static_cast<std::size_t>(m.relations.rows()), 0) {}

  auto entity(EntityId id) {
    if (!entity_seen_[id]) {
      entity_seen_[id] = 1;
      entity_rows_.push_back(id);
    }
    return entities.row(id).transpose();
  }
  auto relation(RelationId id) {
    if (!relation_seen_[id]) {
      relation_seen_[id] = 1;
      relation_rows_.push_back(id);
    }
    return relations.row(id).transpose();
  }

  // Rows are applied in first-touch order, which is fixed by the batch order.
  void apply(Model& m, Scalar learning_rate) {
    for (EntityId id : entity_rows_) m.entities.row(id) -= learning_rate * entities.row(id);
    for (RelationId id : relation_rows_) m.relations.row(id) -= learning_rate * relations.row(id);
    if (filters.size()) m.filters -= learning_rate * filters;
    if (weights.size()) m.weights -= learning_rate * weights;
    clear();
  }

  void clear() {
    for (EntityId id : entity_rows_) {
      entities.row(id).setZero();
      entity_seen_[id] = 0;
    }
    for (RelationId id : relation_rows_) {
      relations.row(id).setZero();
      relation_seen_[id] = 0;
    }
    entity_rows_.clear();
    relation_rows_.clear();
    filters.setZero();
    weights.setZero();
  }

  Matrix entities;
  Matrix relations;
  Matrix filters;
  Vector weights;

 private:
  std::vector<char> entity_seen_;
  std::vector<char> relation_seen_;
  std::vector<EntityId> entity_rows_;
  std::vector<RelationId> relation_rows_;
};

// grad += coeff * d score(x) / d params
template <typename Scalar>
void accumulate_score_gradient(const EmbeddingModel<Scalar>& m, const Triple& x, Scalar coeff,
                               GradientBuffer<Scalar>& grad) {
  using Vector = typename EmbeddingModel<Scalar>::Vector;
  detail::check_ids(m, x.head, x.relation, x.tail);
  const auto h = m.entity(x.head);
  const auto r = m.relation(x.relation);
  const auto t = m.entity(x.tail);
  const Eigen::Index d = m.dim();

  switch (m.kind) {
    case ModelKind::kTransE: {
      Vector u = h + r - t;
      Vector g;
      if (m.norm == NormKind::kL1) {
        g = -u.array().sign().matrix();
      } else {
        const Scalar len = u.norm();
        g = len > Scalar(0) ? Vector(-u / len) : Vector::Zero(d);
      }
      grad.entity(x.head) += coeff * g;
      grad.relation(x.relation) += coeff * g;
      grad.entity(x.tail) -= coeff * g;
      break;
    }
    case ModelKind::kHolE: {
      // ds/dr = h * t, ds/dh = r * t, ds/dt_j = sum_k r_k h_{(j-k) mod d}
      grad.relation(x.relation) += coeff * circular_correlation(h, t);
      grad.entity(x.head) += coeff * circular_correlation(r, t);
      auto gt = grad.entity(x.tail);
      for (Eigen::Index k = 0; k < d; ++k) {
        const Scalar c = coeff * r[k];
        gt.tail(d - k) += c * h.head(d - k);
        gt.head(k) += c * h.tail(k);
      }
      break;
    }
    case ModelKind::kConvKB: {
      Vector gh = Vector::Zero(d), gr = Vector::Zero(d), gtail = Vector::Zero(d);
      for (Eigen::Index f = 0; f < m.num_filters(); ++f) {
        Vector pre = m.filters(f, 0) * h + m.filters(f, 1) * r + m.filters(f, 2) * t;
        Vector act = pre.cwiseMax(Scalar(0));
        Vector ga = (pre.array() > Scalar(0))
                        .select(m.weights.segment(f * d, d).array(), Scalar(0))
                        .matrix();
        grad.weights.segment(f * d, d) += coeff * act;
        grad.filters(f, 0) += coeff * ga.dot(h);
        grad.filters(f, 1) += coeff * ga.dot(r);
        grad.filters(f, 2) += coeff * ga.dot(t);
        gh += m.filters(f, 0) * ga;
        gr += m.filters(f, 1) * ga;
        gtail += m.filters(f, 2) * ga;
      }
      grad.entity(x.head) += coeff * gh;
      grad.relation(x.relation) += coeff * gr;
      grad.entity(x.tail) += coeff * gtail;
      break;
    }
  }
}

struct TriplePair {
  Triple positive;
  Triple negative;
};

// sum over pairs of max(0, margin - s(pos) + s(neg)); optionally accumulates
// the subgradient (zero at the hinge).
template <typename Scalar>
Scalar margin_loss(const EmbeddingModel<Scalar>& m, std::span<const TriplePair> pairs,
                   Scalar margin, GradientBuffer<Scalar>* grad = nullptr) {
  Scalar total(0);
  for (const auto& p : pairs) {
    const Scalar term = margin - score(m, p.positive) + score(m, p.negative);
    if (term <= Scalar(0)) continue;
    total += term;
    if (grad) {
      accumulate_score_gradient(m, p.positive, Scalar(-1), *grad);
      accumulate_score_gradient(m, p.negative, Scalar(1), *grad);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  ModelKind kind = ModelKind::kHolE;
  std::size_t dim = 100;
  std::size_t epochs = 300;
  std::size_t batch_size = 256;
  double learning_rate = 0.01;
  double margin = 1.0;
  std::size_t negatives_per_positive = 1;
  std::uint64_t seed = 42;
  std::optional<RelationId> target_relation;
  NormKind norm = NormKind::kL2;
  std::size_t filters = 64;  // ConvKB tau
  bool corrupt_heads = false;
  // HolE and ConvKB: entity rows touched by a batch are projected back onto
  // the ball of this L2 radius after the update. 0 disables.
  double max_entity_norm = 1.0;
  // Entities a corrupted tail is drawn from; empty means every entity.
  IdSet corruption_pool;

  void validate() const {
    if (dim < 1 || epochs < 1 || batch_size < 1 || negatives_per_positive < 1)
      throw std::invalid_argument("training counts must be >= 1");
    if (kind == ModelKind::kConvKB && filters < 1)
      throw std::invalid_argument("ConvKB needs at least one filter");
    if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(margin > 0)) throw std::invalid_argument("margin must be > 0");
    if (!(max_entity_norm >= 0)) throw std::invalid_argument("max_entity_norm must be >= 0");
  }
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double elapsed_ms = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

inline constexpr int kMaxCorruptionAttempts = 100;

// Replaces the tail (or the head when `corrupt_head`) with a uniform draw from
// `pool` (all entities when empty), rejecting draws that form a known triple.
// After kMaxCorruptionAttempts rejections the last draw is returned as is.
inline Triple negative_sample(const KnowledgeGraph& g, const Triple& positive,
                              std::mt19937_64& rng, std::span<const EntityId> pool = {},
                              bool corrupt_head = false) {
  const std::size_t range = pool.empty() ? g.num_entities() : pool.size();
  if (range == 0) throw std::invalid_argument("negative_sample: empty entity range");
  std::uniform_int_distribution<std::size_t> pick(0, range - 1);
  Triple neg = positive;
  for (int attempt = 0; attempt < kMaxCorruptionAttempts; ++attempt) {
    const std::size_t i = pick(rng);
    const EntityId e = pool.empty() ? static_cast<EntityId>(i) : pool[i];
    (corrupt_head ? neg.head : neg.tail) = e;
    if (!g.contains(neg)) break;
  }
  return neg;
}

template <typename Scalar>
EmbeddingModel<Scalar> initialize_model(const KnowledgeGraph& g, const TrainConfig& c) {
  const auto n = static_cast<Eigen::Index>(g.num_entities());
  const auto m = static_cast<Eigen::Index>(g.num_relations());
  const auto d = static_cast<Eigen::Index>(c.dim);
  auto model = EmbeddingModel<Scalar>::zeros(c.kind, n, m, d, static_cast<Eigen::Index>(c.filters));
  model.norm = c.norm;
  model.seed = c.seed;

  std::mt19937_64 rng(c.seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(c.dim));
  std::uniform_real_distribution<double> uni(-bound, bound);
  auto fill = [&](auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = static_cast<Scalar>(uni(rng));
  };
  fill(model.entities);
  fill(model.relations);
  fill(model.filters);
  fill(model.weights);
  if (c.kind == ModelKind::kTransE) model.entities.rowwise().normalize();
  return model;
}

// Mini-batch SGD on the margin ranking loss. Bit-deterministic for a given
// (graph, config). Throws NumericError when an epoch produces a non-finite
// loss or parameter.
template <typename Scalar>
EmbeddingModel<Scalar> train(const KnowledgeGraph& g, const TrainConfig& c,
                             const EpochCallback& on_epoch = {}) {
  c.validate();
  std::vector<Triple> positives;
  for (const auto& t : g.triples())
    if (!c.target_relation || t.relation == *c.target_relation) positives.push_back(t);
  if (positives.empty()) throw DataError("no training triples for the requested relation");

  auto model = initialize_model<Scalar>(g, c);
  GradientBuffer<Scalar> grad(model);
  std::mt19937_64 rng(c.seed ^ 0x5bd1e995ULL);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::size_t> order(positives.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<TriplePair> batch;
  batch.reserve(c.batch_size * c.negatives_per_positive);
  const auto lr = static_cast<Scalar>(c.learning_rate);
  const auto margin = static_cast<Scalar>(c.margin);
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= c.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += c.batch_size) {
      const std::size_t end = std::min(order.size(), begin + c.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const Triple& pos = positives[order[i]];
        const bool may_corrupt_head =
            c.corrupt_heads && (!c.target_relation || pos.relation != *c.target_relation);
        for (std::size_t j = 0; j < c.negatives_per_positive; ++j) {
          const bool head = may_corrupt_head && coin(rng);
          batch.push_back({pos, negative_sample(g, pos, rng, c.corruption_pool, head)});
        }
      }
      epoch_loss += static_cast<double>(margin_loss<Scalar>(model, batch, margin, &grad));
      grad.apply(model, lr);
      if (c.kind != ModelKind::kTransE && c.max_entity_norm > 0) {
        const auto radius = static_cast<Scalar>(c.max_entity_norm);
        auto clip = [&](EntityId id) {
          const Scalar len = model.entities.row(id).norm();
          if (len > radius) model.entities.row(id) *= radius / len;
        };
        for (const auto& p : batch) {
          clip(p.positive.head);
          clip(p.positive.tail);
          clip(p.negative.head);
          clip(p.negative.tail);
        }
      }
    }
    if (c.kind == ModelKind::kTransE) model.entities.rowwise().normalize();

    const double mean = epoch_loss / static_cast<double>(positives.size() * c.negatives_per_positive);
    if (!std::isfinite(mean) || !model.all_finite())
      throw NumericError("epoch " + std::to_string(epoch) + ": non-finite loss or parameters");
    if (on_epoch) {
      const auto now = std::chrono::steady_clock::now();
      on_epoch({epoch, mean, std::chrono::duration<double, std::milli>(now - start).count()});
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Prediction and ranking.

// Candidates by descending score, ties by ascending id.
template <typename Scalar>
RankedPrediction predict_tail(const EmbeddingModel<Scalar>& m, const KnowledgeGraph& /*g*/,
                              EntityId scene, RelationId relation,
                              std::span<const EntityId> candidates) {
  if (candidates.empty()) throw std::invalid_argument("predict_tail: no candidates");
  RankedPrediction out;
  out.reserve(candidates.size());
  for (EntityId c : candidates)
    out.push_back({c, static_cast<double>(score(m, Triple{scene, relation, c}))});
  std::sort(out.begin(), out.end(), [](const ScoredEntity& a, const ScoredEntity& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  return out;
}

namespace detail {
template <typename Scalar>
std::size_t rank_impl(const EmbeddingModel<Scalar>& m, const KnowledgeGraph& g, const Triple& test,
                      std::span<const EntityId> candidates, bool filtered) {
  if (std::find(candidates.begin(), candidates.end(), test.tail) == candidates.end())
    throw std::invalid_argument("true tail is not among the candidates");
  const Scalar truth = score(m, test);
  std::size_t rank = 1;
  for (EntityId c : candidates) {
    if (c == test.tail) continue;
    const Triple other{test.head, test.relation, c};
    if (filtered && g.contains(other)) continue;
    if (score(m, other) >= truth) ++rank;  // ties count against the true tail
  }
  return rank;
}
}  // namespace detail

// 1-based rank of the true tail after dropping every other candidate that
// forms a known triple with (head, relation).
template <typename Scalar>
std::size_t rank_filtered(const EmbeddingModel<Scalar>& m, const KnowledgeGraph& g,
                          const Triple& test, std::span<const EntityId> candidates) {
  return detail::rank_impl(m, g, test, candidates, true);
}

template <typename Scalar>
std::size_t rank_raw(const EmbeddingModel<Scalar>& m, const KnowledgeGraph& g, const Triple& test,
                     std::span<const EntityId> candidates) {
  return detail::rank_impl(m, g, test, candidates, false);
}

}  // namespace kep
