#include "kep/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

namespace kep {

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::kTransE:
      return "transe";
    case SolverKind::kHolE:
      return "hole";
    case SolverKind::kConvKB:
      return "convkb";
    case SolverKind::kArm:
      return "arm";
    case SolverKind::kCc:
      return "cc";
  }
  return "unknown";
}

SolverKind parse_solver_kind(std::string_view name) {
  if (name == "transe") return SolverKind::kTransE;
  if (name == "hole") return SolverKind::kHolE;
  if (name == "convkb") return SolverKind::kConvKB;
  if (name == "arm") return SolverKind::kArm;
  if (name == "cc") return SolverKind::kCc;
  throw std::invalid_argument("unknown solver '" + std::string(name) + "'");
}

std::optional<ModelKind> embedding_kind(SolverKind kind) {
  switch (kind) {
    case SolverKind::kTransE:
      return ModelKind::kTransE;
    case SolverKind::kHolE:
      return ModelKind::kHolE;
    case SolverKind::kConvKB:
      return ModelKind::kConvKB;
    default:
      return std::nullopt;
  }
}

std::string describe(SolverKind kind, const SolverParams& p) {
  std::ostringstream out;
  out.precision(17);
  out << "solver=" << to_string(kind) << '\n';
  if (embedding_kind(kind)) {
    const auto& k = p.kge;
    out << "dim=" << k.dim << "\nepochs=" << k.epochs << "\nbatch_size=" << k.batch_size
        << "\nlearning_rate=" << k.learning_rate << "\nmargin=" << k.margin
        << "\nnegatives=" << k.negatives_per_positive << "\ncorrupt_heads=" << k.corrupt_heads
        << "\nfull_graph=" << p.full_graph << '\n';
    if (kind != SolverKind::kTransE) out << "max_entity_norm=" << k.max_entity_norm << '\n';
    if (kind == SolverKind::kTransE) out << "norm=" << to_string(k.norm) << '\n';
    if (kind == SolverKind::kConvKB) out << "filters=" << k.filters << '\n';
  } else if (kind == SolverKind::kArm) {
    out << "min_support=" << p.min_support.str() << "\nmin_confidence=" << p.min_confidence.str() << '\n';
  } else {
    out << "alpha=" << p.alpha << "\ncc_slots=" << p.cc_slots << "\ncc_max_iters=" << p.cc_max_iters << '\n';
  }
  return out.str();
}

std::string fingerprint(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset make_dataset(KnowledgeGraph reified, std::vector<SceneRecord> train,
                     std::vector<SceneRecord> valid, std::vector<SceneRecord> test,
                     GraphSchema schema) {
  Dataset d;
  const auto rel = reified.relation(schema.includes_type);
  if (!rel) throw DataError("graph has no '" + schema.includes_type + "' relation; run reify first");
  d.relation = *rel;
  d.candidates = reified.tail_vocabulary(*rel);
  d.graph = std::move(reified);
  d.train = std::move(train);
  d.valid = std::move(valid);
  d.test = std::move(test);
  d.schema = std::move(schema);
  return d;
}

KnowledgeGraph kge_training_graph(const Dataset& d, bool full_graph) {
  auto b = GraphBuilder::with_vocabulary(d.graph);
  for (const auto& s : d.train)
    for (EntityId t : s.observed) b.add({s.scene, d.relation, t});
  for (const auto* part : {&d.valid, &d.test})
    for (const auto& s : *part)
      for (EntityId t : s.observed) b.add({s.scene, d.relation, t});

  if (full_graph) {
    std::unordered_map<EntityId, const IdSet*> masked;
    for (const auto* part : {&d.valid, &d.test})
      for (const auto& s : *part)
        if (!s.masked.empty()) masked[s.scene] = &s.masked;
    const auto includes = d.graph.relation(d.schema.includes);
    const auto type = d.graph.relation(d.schema.type);
    for (const auto& t : d.graph.triples()) {
      if (t.relation == d.relation) continue;
      if (includes && type && t.relation == *includes) {
        auto it = masked.find(t.head);
        if (it != masked.end()) {
          bool leaks = false;
          for (EntityId c : d.graph.tails(t.tail, *type)) leaks = leaks || set_contains(*it->second, c);
          if (leaks) continue;
        }
      }
      b.add(t);
    }
  }
  return std::move(b).build();
}

std::vector<Itemset> transactions(std::span<const SceneRecord> scenes) {
  std::vector<Itemset> out;
  out.reserve(scenes.size());
  for (const auto& s : scenes)
    if (!s.observed.empty()) out.push_back(s.observed);
  return out;
}

RankedPrediction KgeSolver::rank(const SceneRecord& scene) const {
  if (scene.scene >= model_.num_entities()) return {};
  return predict_tail(model_, KnowledgeGraph{}, scene.scene, relation_, candidates_);
}

std::unique_ptr<Solver> train_solver(const Dataset& d, SolverKind kind, const SolverParams& params,
                                     std::uint64_t seed, const EpochCallback& on_epoch) {
  if (auto mk = embedding_kind(kind)) {
    TrainConfig c = params.kge;
    c.kind = *mk;
    c.seed = seed;
    c.target_relation = params.full_graph ? std::nullopt : std::optional<RelationId>(d.relation);
    if (c.corruption_pool.empty()) c.corruption_pool = d.candidates;
    const KnowledgeGraph g = kge_training_graph(d, params.full_graph);
    auto model = train<double>(g, c, on_epoch).cast<float>();
    return std::make_unique<KgeSolver>(std::move(model), d.relation, d.candidates);
  }
  if (kind == SolverKind::kArm) {
    const auto txns = transactions(d.train);
    if (txns.empty()) throw DataError("no training scenes with observed types");
    const auto frequent = mine_frequent_itemsets(txns, params.min_support);
    return std::make_unique<ArmSolver>(generate_rules(frequent, txns.size(), params.min_confidence));
  }
  return std::make_unique<CcSolver>(train_cc(d.train, params.alpha, &d.candidates), params.cc_slots,
                                    params.cc_max_iters);
}

MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  s.values = std::move(values);
  if (s.values.empty()) return s;
  double sum = 0.0;
  for (double v : s.values) sum += v;
  s.mean = sum / static_cast<double>(s.values.size());
  if (s.values.size() > 1) {
    double sq = 0.0;
    for (double v : s.values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(s.values.size() - 1));
  }
  return s;
}

std::string format_mean_std(const MetricSummary& s, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", precision, s.mean, precision, s.stddev);
  return buf;
}

std::vector<SceneRecord> queries(std::span<const SceneRecord> scenes) {
  std::vector<SceneRecord> out;
  for (const auto& s : scenes)
    if (!s.masked.empty()) out.push_back(s);
  return out;
}

void add_run(ExperimentResult& result, std::uint64_t seed, EvalReport report) {
  report.fingerprint = result.fingerprint;
  result.seeds.push_back(seed);
  result.runs.push_back(std::move(report));
  std::map<std::string, std::vector<double>> columns;
  for (const auto& r : result.runs) {
    columns["mrr"].push_back(r.ranking.mrr);
    for (const auto& [k, v] : r.ranking.hits) columns["hits@" + std::to_string(k)].push_back(v);
    columns["accuracy"].push_back(r.kep.accuracy);
    columns["micro_f1"].push_back(r.kep.micro_f1);
    columns["macro_f1"].push_back(r.kep.macro_f1);
  }
  result.summary.clear();
  for (auto& [name, values] : columns) result.summary[name] = summarize(std::move(values));
}

ExperimentResult run_experiment(const Dataset& d, SolverKind kind, const SolverParams& params,
                                std::uint64_t seed, std::size_t repeats,
                                std::span<const std::size_t> ks, const EpochCallback& on_epoch) {
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  const auto test = queries(d.test);
  if (test.empty()) throw DataError("no test scenes with masked types");
  ExperimentResult result;
  result.solver = kind;
  result.fingerprint = fingerprint(describe(kind, params));
  for (std::size_t r = 0; r < repeats; ++r) {
    const std::uint64_t s = seed + r;
    auto solver = train_solver(d, kind, params, s, on_epoch);
    add_run(result, s, evaluate_solver(*solver, test, d.graph, d.relation, d.candidates, ks));
  }
  return result;
}

namespace {

// mrr, hits@K by K, accuracy, micro_f1, macro_f1
std::vector<std::string> metric_order(const ExperimentResult& result) {
  std::vector<std::string> names{"mrr"};
  if (!result.runs.empty())
    for (const auto& [k, v] : result.runs.front().ranking.hits) names.push_back("hits@" + std::to_string(k));
  for (const char* n : {"accuracy", "micro_f1", "macro_f1"}) names.emplace_back(n);
  std::erase_if(names, [&](const std::string& n) { return !result.summary.contains(n); });
  return names;
}

}  // namespace

nlohmann::ordered_json to_json(const ExperimentResult& result, const Vocabulary& nodes) {
  nlohmann::ordered_json j;
  j["solver"] = to_string(result.solver);
  j["fingerprint"] = result.fingerprint;
  j["seeds"] = result.seeds;
  j["repeats"] = result.runs.size();
  auto summary = nlohmann::ordered_json::object();
  for (const auto& name : metric_order(result)) {
    const auto& s = result.summary.at(name);
    summary[name] = {{"mean", s.mean}, {"std", s.stddev}, {"values", s.values}};
  }
  j["summary"] = summary;
  auto runs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    auto r = to_json(result.runs[i], nodes);
    r["seed"] = result.seeds[i];
    runs.push_back(std::move(r));
  }
  j["runs"] = runs;
  return j;
}

std::string to_table(const ExperimentResult& result) {
  std::ostringstream out;
  out << to_string(result.solver) << "  (" << result.runs.size() << " runs, fingerprint "
      << result.fingerprint << ")\n";
  char buf[128];
  for (const auto& name : metric_order(result)) {
    std::snprintf(buf, sizeof buf, "  %-10s %s\n", name.c_str(),
                  format_mean_std(result.summary.at(name)).c_str());
    out << buf;
  }
  return out.str();
}

}  // namespace kep
