// kep: command-line pipeline for knowledge-based entity prediction.
//
//   ingest -> reify -> split -> train -> predict / evaluate
//   syngen, bench
//
// Exit codes: 0 ok, 1 usage, 2 data or I/O, 3 numeric failure. Errors are
// written to stderr as one JSON object per line.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "kep/archive.hpp"
#include "kep/io.hpp"
#include "kep/pipeline.hpp"
#include "kep/syngen.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

int emit_error(const char* kind, const std::string& message, int code) {
  ordered_json j;
  j["status"] = "error";
  j["kind"] = kind;
  j["message"] = message;
  j["exit_code"] = code;
  std::cerr << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << std::endl;
  return code;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::size_t parse_size(const std::string& text, const char* what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != text.size()) throw std::invalid_argument(std::string(what) + ": '" + text + "' is not an integer");
  return static_cast<std::size_t>(v);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  auto out = kep::open_output(path);
  out << text;
  if (!out) throw kep::IoError("write to '" + path + "' failed");
}

std::string dump(const ordered_json& j) {
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

struct Options {
  // io
  std::string input, output, graph, split_dir, model, scenes, config;
  // schema
  kep::GraphSchema schema;
  // split
  std::string ratios = "0.8,0.1,0.1";
  std::size_t k_mask = 1;
  // solver
  std::string solver = "hole";
  bool solver_given = false;
  kep::SolverParams params;
  std::string norm = "l2";
  std::string min_support = "1/20";
  std::string min_confidence = "1/2";
  std::uint64_t seed = 42;
  // evaluate
  std::size_t repeats = 1;
  bool table = false;
  std::string hits = "1,3,10";
  std::string on = "test";
  // predict
  std::size_t top = 0;
  // syngen
  std::size_t archetypes = 5, vocab_size = 12, n_scenes = 2000;
  double in_block = 0.8, off_block = 0.05, noise = 0.1;
  // bench
  std::string solvers = "transe,hole,convkb,arm,cc";
  std::string dims = "50,100,200";
};

const std::vector<std::string> kSolverNames = {"transe", "hole", "convkb", "arm", "cc"};

void add_schema_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--includes", o.schema.includes, "Scene-to-instance relation label")->capture_default_str();
  cmd->add_option("--type", o.schema.type, "Instance-to-type relation label")->capture_default_str();
  cmd->add_option("--relation", o.schema.includes_type, "Reified scene-to-type relation label")
      ->capture_default_str();
}

void add_solver_flags(CLI::App* cmd, Options& o, bool with_solver = true) {
  auto& k = o.params.kge;
  if (with_solver)
    cmd->add_option("--solver", o.solver, "Solver (inferred from --model when omitted)")
        ->check(CLI::IsMember(kSolverNames))
        ->capture_default_str()
        ->each([&o](const std::string&) { o.solver_given = true; });
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  cmd->add_option("--dim", k.dim, "Embedding dimension d")->capture_default_str();
  cmd->add_option("--epochs", k.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch-size", k.batch_size, "Positives per SGD step")->capture_default_str();
  cmd->add_option("--lr", k.learning_rate, "SGD learning rate")->capture_default_str();
  cmd->add_option("--margin", k.margin, "Ranking margin")->capture_default_str();
  cmd->add_option("--negatives", k.negatives_per_positive, "Negatives per positive")->capture_default_str();
  cmd->add_option("--norm", o.norm, "TransE norm")->check(CLI::IsMember({"l1", "l2"}))->capture_default_str();
  cmd->add_option("--filters", k.filters, "ConvKB filter count")->capture_default_str();
  cmd->add_option("--max-entity-norm", k.max_entity_norm, "HolE/ConvKB entity norm bound (0 = off)")
      ->capture_default_str();
  cmd->add_flag("--corrupt-heads", k.corrupt_heads, "Also corrupt heads of non-target relations");
  cmd->add_flag("--full-graph", o.params.full_graph, "Train embeddings on the whole graph");
  cmd->add_option("--min-support", o.min_support, "ARM minimum support (p/q or decimal)")->capture_default_str();
  cmd->add_option("--min-confidence", o.min_confidence, "ARM minimum confidence")->capture_default_str();
  cmd->add_option("--alpha", o.params.alpha, "CC Laplace smoothing")->capture_default_str();
  cmd->add_option("--cc-slots", o.params.cc_slots, "CC unobserved slots per scene")->capture_default_str();
  cmd->add_option("--cc-max-iters", o.params.cc_max_iters, "CC iteration cap")->capture_default_str();
  add_schema_flags(cmd, o);
}

void finish_params(Options& o) {
  o.params.kge.norm = kep::parse_norm_kind(o.norm);
  o.params.min_support = kep::Rational::parse(o.min_support);
  o.params.min_confidence = kep::Rational::parse(o.min_confidence);
  if (!(o.params.alpha > 0)) throw std::invalid_argument("--alpha must be > 0");
  if (o.params.cc_slots < 1 || o.params.cc_max_iters < 1)
    throw std::invalid_argument("--cc-slots and --cc-max-iters must be >= 1");
  o.params.kge.validate();
}

// Every option value except file locations; a --config file counts by content.
std::string run_fingerprint(const CLI::App* cmd) {
  static const std::set<std::string> kPaths = {"--input", "--output", "--output-dir", "--graph",
                                               "--split-dir", "--model", "--scenes"};
  std::string text = cmd->get_name() + "\n";
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help" || kPaths.contains(name)) continue;
    std::string value;
    for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    if (opt->results().empty()) value = opt->get_default_str();
    if (name == "--config" && !value.empty()) {
      auto in = kep::open_input(value);
      value = std::string(std::istreambuf_iterator<char>(in), {});
    }
    text += name + "=" + value + "\n";
  }
  return kep::fingerprint(text);
}

std::vector<std::string> provenance(const std::string& fp, std::uint64_t seed) {
  return {"fingerprint=" + fp, "seed=" + std::to_string(seed)};
}

kep::KnowledgeGraph load_graph(const std::string& path) {
  const auto triples = kep::load_triples(path);
  return kep::build_graph(triples);
}

kep::Dataset load_dataset(const Options& o) {
  auto g = load_graph(o.graph);
  const fs::path dir(o.split_dir);
  auto train = kep::load_scenes(dir / "train.jsonl", g);
  auto valid = kep::load_scenes(dir / "valid.jsonl", g);
  auto test = kep::load_scenes(dir / "test.jsonl", g);
  return kep::make_dataset(std::move(g), std::move(train), std::move(valid), std::move(test), o.schema);
}

std::vector<std::size_t> parse_hits(const std::string& text) {
  std::vector<std::size_t> ks;
  for (const auto& s : split_list(text)) {
    ks.push_back(parse_size(s, "--hits"));
    if (ks.back() < 1) throw std::invalid_argument("--hits: K must be >= 1");
  }
  if (ks.empty()) throw std::invalid_argument("--hits: empty list");
  return ks;
}

kep::EpochCallback epoch_printer() {
  return [](const kep::EpochStats& e) {
    ordered_json j;
    j["epoch"] = e.epoch;
    j["mean_loss"] = e.mean_loss;
    j["elapsed_ms"] = e.elapsed_ms;
    std::cout << j.dump() << '\n';
  };
}

// Solver kind of a file written by `train`: archives name their kind, anything
// else is read as a rules file.
kep::SolverKind model_solver(const Options& o) {
  std::string magic;
  {
    auto in = kep::open_input(o.model, true);
    std::getline(in, magic);
  }
  kep::SolverKind kind = kep::SolverKind::kArm;
  if (magic == "KEP-ARCHIVE") {
    const auto name = kep::archive_kind(o.model);
    kind = name == "cooccurrence" ? kep::SolverKind::kCc : kep::parse_solver_kind(name);
  }
  if (o.solver_given && kep::parse_solver_kind(o.solver) != kind)
    throw kep::DataError(o.model + " holds a " + kep::to_string(kind) + " model, not " + o.solver);
  return kind;
}

std::unique_ptr<kep::Solver> load_solver(const Options& o, const kep::Dataset& d, kep::SolverKind kind) {
  if (kep::embedding_kind(kind)) {
    auto model = kep::load_model(o.model);
    if (static_cast<std::size_t>(model.num_entities()) != d.graph.num_entities() ||
        static_cast<std::size_t>(model.num_relations()) != d.graph.num_relations())
      throw kep::DataError("model shape does not match the graph");
    return std::make_unique<kep::KgeSolver>(std::move(model), d.relation, d.candidates);
  }
  if (kind == kep::SolverKind::kArm) {
    auto in = kep::open_input(o.model);
    return std::make_unique<kep::ArmSolver>(kep::read_rules(in, d.graph.nodes()));
  }
  return std::make_unique<kep::CcSolver>(kep::load_cooccurrence(o.model), o.params.cc_slots,
                                         o.params.cc_max_iters);
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Options& o, const std::string& fp) {
  const auto triples = kep::load_triples(o.input);
  const auto g = kep::build_graph(triples);
  if (!o.output.empty()) {
    const auto labels = g.to_labels();
    kep::save_triples(labels, o.output, provenance(fp, o.seed));
  }
  ordered_json j;
  j["command"] = "ingest";
  j["fingerprint"] = fp;
  j["seed"] = o.seed;
  j["n_entities"] = g.num_entities();
  j["n_relations"] = g.num_relations();
  j["n_triples"] = g.num_triples();
  j["duplicates_dropped"] = triples.size() - g.num_triples();
  std::cout << dump(j);
  return kExitOk;
}

int cmd_reify(const Options& o, const std::string& fp) {
  const auto g = load_graph(o.input);
  const auto inc = g.relation(o.schema.includes);
  const auto ty = g.relation(o.schema.type);
  if (!inc) throw kep::DataError("relation '" + o.schema.includes + "' not in graph");
  if (!ty) throw kep::DataError("relation '" + o.schema.type + "' not in graph");
  const auto r = kep::reify_includes_type(g, *inc, *ty, o.schema.includes_type);
  const auto labels = r.to_labels();
  kep::save_triples(labels, o.output, provenance(fp, o.seed));
  ordered_json j;
  j["command"] = "reify";
  j["fingerprint"] = fp;
  j["seed"] = o.seed;
  j["added"] = r.num_triples() - g.num_triples();
  j["n_triples"] = r.num_triples();
  std::cout << dump(j);
  return kExitOk;
}

int cmd_split(const Options& o, const std::string& fp) {
  const auto g = load_graph(o.graph);
  const auto rel = g.relation(o.schema.includes_type);
  if (!rel) throw kep::DataError("relation '" + o.schema.includes_type + "' not in graph; run reify first");
  const auto parts = split_list(o.ratios);
  if (parts.size() != 3) throw std::invalid_argument("--ratios needs three comma-separated fractions");
  kep::SplitRatios ratios;
  try {
    ratios = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
  } catch (const std::exception&) {
    throw std::invalid_argument("--ratios: not a number");
  }
  const auto scenes = kep::extract_scenes(g, *rel);
  const auto split = kep::split_and_mask(scenes, ratios, o.k_mask, o.seed);
  fs::create_directories(o.output);
  const auto header = provenance(fp, o.seed);
  kep::save_scenes(split.train, g, fs::path(o.output) / "train.jsonl", header);
  kep::save_scenes(split.valid, g, fs::path(o.output) / "valid.jsonl", header);
  kep::save_scenes(split.test, g, fs::path(o.output) / "test.jsonl", header);
  ordered_json j;
  j["command"] = "split";
  j["fingerprint"] = fp;
  j["seed"] = o.seed;
  j["train"] = split.train.size();
  j["valid"] = split.valid.size();
  j["test"] = split.test.size();
  auto flagged = ordered_json::array();
  for (auto id : split.unmaskable) flagged.push_back(g.nodes().label(id));
  j["unmaskable"] = flagged;
  std::cout << dump(j);
  return kExitOk;
}

int cmd_train(const Options& o, const std::string& fp) {
  const auto d = load_dataset(o);
  const auto kind = kep::parse_solver_kind(o.solver);
  const auto start = std::chrono::steady_clock::now();
  auto solver = kep::train_solver(d, kind, o.params, o.seed, epoch_printer());
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  ordered_json j;
  j["command"] = "train";
  j["solver"] = o.solver;
  j["fingerprint"] = fp;
  j["seed"] = o.seed;
  j["output"] = o.output;
  std::vector<std::pair<std::string, std::string>> extra = {
      {"fingerprint", fp}, {"relation", o.schema.includes_type}};
  if (auto* kge = dynamic_cast<const kep::KgeSolver*>(solver.get())) {
    kep::save_model(kge->model(), o.output, extra);
    j["parameter_bytes"] = kge->model().parameter_bytes();
  } else if (auto* arm = dynamic_cast<const kep::ArmSolver*>(solver.get())) {
    auto out = kep::open_output(o.output);
    kep::write_rules(arm->rules(), d.graph.nodes(), out, provenance(fp, o.seed));
    if (!out) throw kep::IoError("write to '" + o.output + "' failed");
    j["n_rules"] = arm->rules().rules.size();
  } else if (auto* cc = dynamic_cast<const kep::CcSolver*>(solver.get())) {
    extra.emplace_back("seed", std::to_string(o.seed));
    kep::save_cooccurrence(cc->model(), o.output, extra);
    j["vocab_size"] = cc->model().vocab_size();
  }
  j["train_ms"] = ms;
  std::cout << dump(j);
  return kExitOk;
}

int cmd_predict(const Options& o, const std::string& fp) {
  auto g = load_graph(o.graph);
  auto scenes = kep::load_scenes(o.scenes, g);
  const auto d = kep::make_dataset(std::move(g), {}, {}, {}, o.schema);
  const auto kind = model_solver(o);
  const auto solver = load_solver(o, d, kind);
  ordered_json j;
  j["command"] = "predict";
  j["solver"] = kep::to_string(kind);
  j["fingerprint"] = fp;
  j["seed"] = o.seed;
  auto rows = ordered_json::array();
  for (const auto& s : scenes) {
    const auto ranking = solver->rank(s);
    auto items = ordered_json::array();
    for (std::size_t i = 0; i < ranking.size() && (o.top == 0 || i < o.top); ++i)
      items.push_back({{"type", d.graph.nodes().label(ranking[i].id)}, {"score", ranking[i].score}});
    rows.push_back({{"scene_id", d.graph.nodes().label(s.scene)}, {"ranking", items}});
  }
  j["predictions"] = rows;
  write_text(o.output, dump(j));
  return kExitOk;
}

int cmd_evaluate(const Options& o, const std::string& fp) {
  auto d = load_dataset(o);
  if (o.on == "valid") std::swap(d.valid, d.test);
  const auto ks = parse_hits(o.hits);
  const auto kind = o.model.empty() ? kep::parse_solver_kind(o.solver) : model_solver(o);

  kep::ExperimentResult result;
  if (!o.model.empty()) {
    if (o.repeats != 1) throw std::invalid_argument("--repeats needs training; drop --model");
    const auto solver = load_solver(o, d, kind);
    const auto test = kep::queries(d.test);
    if (test.empty()) throw kep::DataError("no scenes with masked types");
    result.solver = kind;
    result.fingerprint = fp;
    kep::add_run(result, o.seed, kep::evaluate_solver(*solver, test, d.graph, d.relation, d.candidates, ks));
  } else {
    result = kep::run_experiment(d, kind, o.params, o.seed, o.repeats, ks);
    result.fingerprint = fp;
    for (auto& r : result.runs) r.fingerprint = fp;
  }
  auto j = kep::to_json(result, d.graph.nodes());
  j["seed"] = o.seed;
  j["evaluated_on"] = o.on;
  write_text(o.output, dump(j));
  if (o.table) {
    std::cout << kep::to_table(result);
    for (std::size_t i = 0; i < result.runs.size(); ++i)
      std::cout << "seed " << result.seeds[i] << ": "
                << kep::to_table(result.runs[i], d.graph.nodes(), i + 1 == result.runs.size());
  }
  return kExitOk;
}

int cmd_syngen(CLI::App* cmd, const Options& o, const std::string& fp) {
  kep::GeneratorConfig c;
  if (!o.config.empty()) {
    auto in = kep::open_input(o.config);
    c = kep::parse_generator_config(in);
    if (cmd->count("--scenes")) c.n_scenes = o.n_scenes;
    if (cmd->count("--seed")) c.seed = o.seed;
    if (cmd->count("--noise")) c.noise = o.noise;
  } else {
    c = kep::GeneratorConfig::block_diagonal(o.archetypes, o.vocab_size, o.in_block, o.off_block, o.noise,
                                             o.n_scenes, o.seed);
  }
  c.validate();
  const auto data = kep::generate(c);
  fs::create_directories(o.output);
  const auto header = provenance(fp, c.seed);
  kep::save_triples(data.triples, fs::path(o.output) / "graph.tsv", header);
  kep::save_scenes(data.scenes, data.graph, fs::path(o.output) / "scenes.jsonl", header);
  {
    auto out = kep::open_output(fs::path(o.output) / "config.txt");
    for (const auto& h : header) out << "# " << h << '\n';
    out << kep::to_text(c);
  }
  ordered_json j;
  j["command"] = "syngen";
  j["fingerprint"] = fp;
  j["seed"] = c.seed;
  j["n_scenes"] = data.scenes.size();
  j["n_triples"] = data.triples.size();
  j["files"] = {"graph.tsv", "scenes.jsonl", "config.txt"};
  std::cout << dump(j);
  return kExitOk;
}

int cmd_bench(const Options& o, const std::string& fp) {
  const auto d = load_dataset(o);
  const auto test = kep::queries(d.test);
  if (test.empty()) throw kep::DataError("no scenes with masked types");
  std::vector<std::size_t> dims;
  for (const auto& s : split_list(o.dims)) dims.push_back(parse_size(s, "--dims"));
  if (dims.empty()) throw std::invalid_argument("--dims: empty list");

  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t) {
    return std::chrono::duration<double, std::milli>(clock::now() - t).count();
  };
  ordered_json rows = ordered_json::array();
  for (const auto& name : split_list(o.solvers)) {
    const auto kind = kep::parse_solver_kind(name);
    const bool embedding = kep::embedding_kind(kind).has_value();
    const std::vector<std::size_t> sweep = embedding ? dims : std::vector<std::size_t>{0};
    for (std::size_t dim : sweep) {
      auto params = o.params;
      if (embedding) params.kge.dim = dim;
      params.kge.validate();
      const auto t0 = clock::now();
      const auto solver = kep::train_solver(d, kind, params, o.seed);
      const double train_ms = ms_since(t0);
      const auto t1 = clock::now();
      const auto report = kep::evaluate_solver(*solver, test, d.graph, d.relation, d.candidates);
      const double eval_ms = ms_since(t1);

      ordered_json row;
      row["solver"] = name;
      if (embedding) row["dim"] = dim;
      std::size_t bytes = 0;
      if (auto* kge = dynamic_cast<const kep::KgeSolver*>(solver.get())) {
        bytes = kge->model().parameter_bytes();
        // training holds double parameters plus a same-shaped gradient buffer
        row["training_bytes"] = 2 * kge->model().parameter_count() * sizeof(double);
      } else if (auto* arm = dynamic_cast<const kep::ArmSolver*>(solver.get())) {
        for (const auto& r : arm->rules().rules)
          bytes += sizeof(r) + (r.antecedent.size() + r.consequent.size()) * sizeof(kep::EntityId);
        row["n_rules"] = arm->rules().rules.size();
      } else if (auto* cc = dynamic_cast<const kep::CcSolver*>(solver.get())) {
        const auto L = static_cast<std::size_t>(cc->model().vocab_size());
        bytes = (L * L + L) * sizeof(std::int64_t) + L * sizeof(kep::EntityId);
      }
      row["parameter_bytes"] = bytes;
      row["train_ms"] = train_ms;
      row["eval_ms"] = eval_ms;
      row["mrr"] = report.ranking.mrr;
      row["kep_accuracy"] = report.kep.accuracy;
      rows.push_back(row);
    }
  }
  ordered_json j;
  j["command"] = "bench";
  j["fingerprint"] = fp;
  j["seed"] = o.seed;
  j["rows"] = rows;
  write_text(o.output, dump(j));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-based entity prediction: scene graph completion toolkit"};
  app.require_subcommand(1, 1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "Validate a triple file and report vocabulary sizes");
  ingest->add_option("--input", o.input, "Triple file (TSV)")->required();
  ingest->add_option("--output", o.output, "Write the deduplicated graph here");
  ingest->add_option("--seed", o.seed, "Recorded in outputs")->capture_default_str();

  auto* reify = app.add_subcommand("reify", "Add scene-includesType-type triples");
  reify->add_option("--input", o.input, "Raw triple file")->required();
  reify->add_option("--output", o.output, "Reified triple file")->required();
  reify->add_option("--seed", o.seed, "Recorded in outputs")->capture_default_str();
  add_schema_flags(reify, o);

  auto* split = app.add_subcommand("split", "Split scenes and mask types for evaluation");
  split->add_option("--graph", o.graph, "Reified triple file")->required();
  split->add_option("--output-dir", o.output, "Directory for train/valid/test.jsonl")->required();
  split->add_option("--ratios", o.ratios, "train,valid,test fractions")->capture_default_str();
  split->add_option("--k-mask", o.k_mask, "Types masked per valid/test scene")->capture_default_str();
  split->add_option("--seed", o.seed, "Shuffle and masking seed")->capture_default_str();
  add_schema_flags(split, o);

  auto* train = app.add_subcommand("train", "Train one solver");
  train->add_option("--graph", o.graph, "Reified triple file")->required();
  train->add_option("--split-dir", o.split_dir, "Output directory of `split`")->required();
  train->add_option("--output", o.output, "Model archive (or rule file for arm)")->required();
  add_solver_flags(train, o);

  auto* predict = app.add_subcommand("predict", "Rank missing types for scenes");
  predict->add_option("--graph", o.graph, "Reified triple file")->required();
  predict->add_option("--model", o.model, "File written by `train`")->required();
  predict->add_option("--scenes", o.scenes, "Scene file (JSON lines)")->required();
  predict->add_option("--output", o.output, "Output JSON (default stdout)");
  predict->add_option("--top", o.top, "Keep the first K types (0 = all)")->capture_default_str();
  add_solver_flags(predict, o);

  auto* evaluate = app.add_subcommand("evaluate", "Train (or load) and evaluate a solver");
  evaluate->add_option("--graph", o.graph, "Reified triple file")->required();
  evaluate->add_option("--split-dir", o.split_dir, "Output directory of `split`")->required();
  evaluate->add_option("--model", o.model, "Evaluate this trained model instead of training");
  evaluate->add_option("--output", o.output, "Report JSON (default stdout)");
  evaluate->add_option("--repeats", o.repeats, "Runs with seeds seed..seed+R-1")->capture_default_str();
  evaluate->add_option("--hits", o.hits, "Hits@K cutoffs")->capture_default_str();
  evaluate->add_option("--on", o.on, "Scene set to evaluate")->check(CLI::IsMember({"test", "valid"}))
      ->capture_default_str();
  evaluate->add_flag("--table", o.table, "Also print plain-text tables");
  add_solver_flags(evaluate, o);

  auto* syngen = app.add_subcommand("syngen", "Generate a synthetic scene graph");
  syngen->add_option("--output-dir", o.output, "Directory for graph.tsv, scenes.jsonl, config.txt")->required();
  syngen->add_option("--config", o.config, "key=value generator config");
  syngen->add_option("--archetypes", o.archetypes, "Archetype count")->capture_default_str();
  syngen->add_option("--vocab-size", o.vocab_size, "Type vocabulary size")->capture_default_str();
  syngen->add_option("--in-block", o.in_block, "Inclusion probability inside an archetype block")
      ->capture_default_str();
  syngen->add_option("--off-block", o.off_block, "Inclusion probability outside the block")
      ->capture_default_str();
  syngen->add_option("--noise", o.noise, "Per-type flip probability")->capture_default_str();
  syngen->add_option("--scenes", o.n_scenes, "Scene count")->capture_default_str();
  syngen->add_option("--seed", o.seed, "Generator seed")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Wall-clock and parameter memory per solver");
  bench->add_option("--graph", o.graph, "Reified triple file")->required();
  bench->add_option("--split-dir", o.split_dir, "Output directory of `split`")->required();
  bench->add_option("--output", o.output, "Report JSON (default stdout)");
  bench->add_option("--solvers", o.solvers, "Comma-separated solvers")->capture_default_str();
  bench->add_option("--dims", o.dims, "Embedding dimensions to sweep")->capture_default_str();
  add_solver_flags(bench, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return emit_error("usage", e.what(), kExitUsage);
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    const std::string fp = run_fingerprint(cmd);
    const std::string name = cmd->get_name();
    if (name == "train" || name == "predict" || name == "evaluate" || name == "bench") finish_params(o);
    if (name == "ingest") return cmd_ingest(o, fp);
    if (name == "reify") return cmd_reify(o, fp);
    if (name == "split") return cmd_split(o, fp);
    if (name == "train") return cmd_train(o, fp);
    if (name == "predict") return cmd_predict(o, fp);
    if (name == "evaluate") return cmd_evaluate(o, fp);
    if (name == "syngen") return cmd_syngen(cmd, o, fp);
    if (name == "bench") return cmd_bench(o, fp);
    return emit_error("usage", "unknown subcommand", kExitUsage);
  } catch (const kep::NumericError& e) {
    return emit_error("numeric", e.what(), kExitNumeric);
  } catch (const kep::DataError& e) {
    return emit_error("data", e.what(), kExitData);
  } catch (const kep::IoError& e) {
    return emit_error("io", e.what(), kExitData);
  } catch (const std::invalid_argument& e) {
    return emit_error("usage", e.what(), kExitUsage);
  } catch (const std::out_of_range& e) {
    return emit_error("usage", e.what(), kExitUsage);
  } catch (const fs::filesystem_error& e) {
    return emit_error("io", e.what(), kExitData);
  } catch (const std::exception& e) {
    return emit_error("data", e.what(), kExitData);
  }
}
