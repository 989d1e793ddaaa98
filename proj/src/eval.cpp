#include "kep/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace kep {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RankedPrediction RandomSolver::rank(const SceneRecord& scene) const {
  RankedPrediction out;
  out.reserve(candidates_.size());
  const std::uint64_t base = mix64(seed_ ^ mix64(scene.scene));
  for (EntityId c : candidates_) {
    const std::uint64_t h = mix64(base ^ (static_cast<std::uint64_t>(c) << 1));
    out.push_back({c, static_cast<double>(h >> 11) * 0x1.0p-53});
  }
  std::sort(out.begin(), out.end(), [](const ScoredEntity& a, const ScoredEntity& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  return out;
}

RankingMetrics ranking_metrics(std::span<const std::size_t> ranks, std::span<const std::size_t> ks) {
  if (ranks.empty()) throw std::invalid_argument("ranking_metrics: no ranks");
  RankingMetrics m;
  double reciprocal = 0.0;
  for (std::size_t r : ranks) {
    if (r < 1) throw std::invalid_argument("ranking_metrics: ranks start at 1");
    reciprocal += 1.0 / static_cast<double>(r);
  }
  const auto n = static_cast<double>(ranks.size());
  m.mrr = reciprocal / n;
  for (std::size_t k : ks) {
    const auto within = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
    m.hits[k] = static_cast<double>(within) / n;
  }
  return m;
}

KepMetrics kep_metrics(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw std::invalid_argument("kep_metrics: no predictions");
  KepMetrics m;
  std::size_t correct = 0;
  for (const auto& p : predictions) {
    if (p.predicted && *p.predicted == p.truth) {
      ++correct;
      ++m.per_class[p.truth].tp;
      continue;
    }
    ++m.per_class[p.truth].fn;
    if (p.predicted) ++m.per_class[*p.predicted].fp;
  }
  double f1_sum = 0.0;
  for (auto& [id, c] : m.per_class) {
    c.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    c.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    c.f1 = c.precision + c.recall > 0 ? 2 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    f1_sum += c.f1;
  }
  const double fraction = static_cast<double>(correct) / static_cast<double>(predictions.size());
  m.accuracy = 100.0 * fraction;
  m.micro_f1 = fraction;
  m.macro_f1 = f1_sum / static_cast<double>(m.per_class.size());
  return m;
}

EvalReport evaluate_solver(const Solver& solver, std::span<const SceneRecord> test,
                           const KnowledgeGraph& known, RelationId relation,
                           std::span<const EntityId> candidates, std::span<const std::size_t> ks) {
  const auto start = std::chrono::steady_clock::now();
  EvalReport report;
  report.solver = solver.name();
  std::vector<Prediction> predictions;
  IdSet candidate_set(candidates.begin(), candidates.end());
  normalize_set(candidate_set);

  for (const auto& scene : test) {
    if (scene.masked.empty())
      throw std::invalid_argument("evaluate_solver: scene without masked types");
    const RankedPrediction ranking = solver.rank(scene);

    IdSet scene_known = scene.observed;
    scene_known.insert(scene_known.end(), scene.masked.begin(), scene.masked.end());
    if (relation < known.num_relations() && scene.scene < known.num_entities()) {
      auto tails = known.tails(scene.scene, relation);
      scene_known.insert(scene_known.end(), tails.begin(), tails.end());
    }
    normalize_set(scene_known);

    for (EntityId truth : scene.masked) {
      auto filtered = [&](EntityId c) { return c != truth && set_contains(scene_known, c); };
      Prediction p{std::nullopt, truth};
      for (const auto& e : ranking)
        if (!filtered(e.id)) {
          p.predicted = e.id;
          break;
        }

      std::size_t rank = 0;
      if (ranking.empty()) {
        rank = candidate_set.size() + 1;
        ++report.n_empty;
      } else {
        auto hit = std::find_if(ranking.begin(), ranking.end(),
                                [&](const ScoredEntity& e) { return e.id == truth; });
        rank = 1;
        if (hit == ranking.end()) {
          for (EntityId c : candidate_set)
            if (c != truth && !filtered(c)) ++rank;
        } else {
          for (const auto& e : ranking)
            if (e.id != truth && !filtered(e.id) && set_contains(candidate_set, e.id) &&
                e.score >= hit->score)
              ++rank;
        }
      }
      report.ranks.push_back(rank);
      predictions.push_back(p);
    }
  }
  report.n_queries = report.ranks.size();
  report.ranking = ranking_metrics(report.ranks, ks);
  report.kep = kep_metrics(predictions);
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

nlohmann::ordered_json to_json(const EvalReport& r, const Vocabulary& nodes) {
  nlohmann::ordered_json j;
  j["solver"] = r.solver;
  j["fingerprint"] = r.fingerprint;
  j["n_queries"] = r.n_queries;
  j["n_empty_rankings"] = r.n_empty;
  j["mrr"] = r.ranking.mrr;
  auto hits = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.ranking.hits) hits[std::to_string(k)] = v;
  j["hits"] = hits;
  j["kep_accuracy"] = r.kep.accuracy;
  j["micro_f1"] = r.kep.micro_f1;
  j["macro_f1"] = r.kep.macro_f1;
  auto classes = nlohmann::ordered_json::array();
  for (const auto& [id, c] : r.kep.per_class) {
    classes.push_back({{"type", id < nodes.size() ? nodes.label(id) : std::to_string(id)},
                       {"tp", c.tp},
                       {"fp", c.fp},
                       {"fn", c.fn},
                       {"precision", c.precision},
                       {"recall", c.recall},
                       {"f1", c.f1}});
  }
  j["per_class"] = classes;
  j["wall_ms"] = r.wall_ms;
  return j;
}

std::string to_table(const EvalReport& r, const Vocabulary& nodes, bool per_class) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s  MRR %.4f", r.solver.c_str(), r.ranking.mrr);
  out << buf;
  for (const auto& [k, v] : r.ranking.hits) {
    std::snprintf(buf, sizeof buf, "  H@%zu %.4f", k, v);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "  Accu %.2f%%  microF1 %.4f  macroF1 %.4f  (%zu queries)\n",
                r.kep.accuracy, r.kep.micro_f1, r.kep.macro_f1, r.n_queries);
  out << buf;
  if (per_class) {
    out << "  type                  P       R       F1     TP   FP   FN\n";
    for (const auto& [id, c] : r.kep.per_class) {
      const std::string label = id < nodes.size() ? nodes.label(id) : std::to_string(id);
      std::snprintf(buf, sizeof buf, "  %-18s  %.4f  %.4f  %.4f  %4zu %4zu %4zu\n", label.c_str(),
                    c.precision, c.recall, c.f1, c.tp, c.fp, c.fn);
      out << buf;
    }
  }
  return out.str();
}

}  // namespace kep
