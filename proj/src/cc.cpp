#include "kep/cc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kep {

std::optional<Eigen::Index> CooccurrenceModel::index_of(EntityId id) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), id);
  if (it == labels.end() || *it != id) return std::nullopt;
  return static_cast<Eigen::Index>(it - labels.begin());
}

CooccurrenceModel train_cc(std::span<const SceneRecord> train, double alpha,
                           const IdSet* vocabulary) {
  if (train.empty()) throw std::invalid_argument("train_cc: no training scenes");
  if (!(alpha > 0)) throw std::invalid_argument("train_cc: smoothing must be > 0");

  CooccurrenceModel model;
  model.alpha = alpha;
  model.n_scenes = static_cast<std::int64_t>(train.size());
  if (vocabulary) {
    model.labels = *vocabulary;
  } else {
    for (const auto& s : train) model.labels.insert(model.labels.end(), s.observed.begin(), s.observed.end());
  }
  normalize_set(model.labels);

  const Eigen::Index L = model.vocab_size();
  model.pair_counts = CountMatrix::Zero(L, L);
  model.label_counts = CountVector::Zero(L);
  std::vector<Eigen::Index> idx;
  for (const auto& s : train) {
    idx.clear();
    for (EntityId e : s.observed)
      if (auto i = model.index_of(e)) idx.push_back(*i);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      ++model.label_counts[idx[a]];
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        ++model.pair_counts(idx[a], idx[b]);
        ++model.pair_counts(idx[b], idx[a]);
      }
    }
  }
  return model;
}

namespace {

std::vector<char> evidence_mask(const CooccurrenceModel& model, const IdSet& evidence) {
  std::vector<char> mask(model.labels.size(), 0);
  for (EntityId e : evidence)
    if (auto i = model.index_of(e)) mask[static_cast<std::size_t>(*i)] = 1;
  return mask;
}

// Evidence terms are summed in label-index order, independent of input order.
double label_score(const CooccurrenceModel& model, Eigen::Index l, const std::vector<char>& mask) {
  const double a = model.alpha;
  const double aL = a * static_cast<double>(model.vocab_size());
  const double cl = static_cast<double>(model.label_counts[l]);
  double s = std::log((cl + a) / (static_cast<double>(model.n_scenes) + aL));
  for (Eigen::Index o = 0; o < model.vocab_size(); ++o)
    if (mask[static_cast<std::size_t>(o)])
      s += std::log((static_cast<double>(model.pair_counts(l, o)) + a) / (cl + aL));
  return s;
}

void sort_ranking(RankedPrediction& r) {
  std::sort(r.begin(), r.end(), [](const ScoredEntity& a, const ScoredEntity& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
}

}  // namespace

RankedPrediction score_labels(const CooccurrenceModel& model, const IdSet& evidence_in) {
  IdSet evidence = evidence_in;  // callers may pass any order
  normalize_set(evidence);
  const auto mask = evidence_mask(model, evidence);
  RankedPrediction out;
  for (Eigen::Index l = 0; l < model.vocab_size(); ++l) {
    const EntityId id = model.labels[static_cast<std::size_t>(l)];
    if (mask[static_cast<std::size_t>(l)] || set_contains(evidence, id)) continue;
    out.push_back({id, label_score(model, l, mask)});
  }
  sort_ranking(out);
  return out;
}

IterativeResult predict_cc_iterative(const CooccurrenceModel& model, const IdSet& observed,
                                     std::size_t n_slots, std::size_t max_iters) {
  if (n_slots < 1 || max_iters < 1)
    throw std::invalid_argument("predict_cc_iterative: n_slots and max_iters must be >= 1");

  IterativeResult result;
  const RankedPrediction initial = score_labels(model, observed);
  for (std::size_t s = 0; s < std::min(n_slots, initial.size()); ++s)
    result.assignment.push_back(initial[s].id);
  const std::size_t slots = result.assignment.size();
  if (slots == 0) return result;

  auto evidence_for = [&](std::size_t slot) {
    IdSet ev = observed;
    for (std::size_t j = 0; j < slots; ++j)
      if (j != slot) ev.push_back(result.assignment[j]);
    normalize_set(ev);
    return ev;
  };
  auto pseudo_likelihood = [&] {
    double total = 0.0;
    for (std::size_t s = 0; s < slots; ++s) {
      const auto mask = evidence_mask(model, evidence_for(s));
      total += label_score(model, *model.index_of(result.assignment[s]), mask);
    }
    return total;
  };
  result.pseudo_likelihood.push_back(pseudo_likelihood());

  std::vector<RankedPrediction> slot_scores(slots);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t s = 0; s < slots; ++s) {
      slot_scores[s] = score_labels(model, evidence_for(s));
      if (slot_scores[s].empty()) continue;
      const EntityId best = slot_scores[s].front().id;
      if (best != result.assignment[s]) {
        result.assignment[s] = best;
        changed = true;
      }
    }
    ++result.iterations;
    result.pseudo_likelihood.push_back(pseudo_likelihood());
    if (!changed) break;
  }

  // merge: best score per label across slots
  std::vector<double> best(model.labels.size(), -INFINITY);
  std::vector<char> seen(model.labels.size(), 0);
  for (const auto& scores : slot_scores)
    for (const auto& e : scores) {
      const auto i = static_cast<std::size_t>(*model.index_of(e.id));
      best[i] = seen[i] ? std::max(best[i], e.score) : e.score;
      seen[i] = 1;
    }
  for (std::size_t i = 0; i < best.size(); ++i)
    if (seen[i]) result.ranking.push_back({model.labels[i], best[i]});
  sort_ranking(result.ranking);
  return result;
}

}  // namespace kep
