#include "kep/syngen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace kep {

namespace {

constexpr int kMaxRedraws = 1000;

std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<double> parse_list(const std::string& key, std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size() && item.find_first_not_of(" \t", used) != std::string::npos)
        throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument(key + ": bad number '" + item + "'");
    }
  }
  return out;
}

}  // namespace

GeneratorConfig GeneratorConfig::block_diagonal(std::size_t archetypes, std::size_t vocab,
                                                double in_block, double off_block, double noise,
                                                std::size_t scenes, std::uint64_t seed) {
  GeneratorConfig c;
  c.n_archetypes = archetypes;
  c.vocab_size = vocab;
  c.noise = noise;
  c.n_scenes = scenes;
  c.seed = seed;
  const auto A = static_cast<Eigen::Index>(archetypes);
  const auto V = static_cast<Eigen::Index>(vocab);
  c.inclusion = Eigen::MatrixXd::Constant(A, V, off_block);
  for (Eigen::Index v = 0; v < V; ++v)
    if (A > 0) c.inclusion(v * A / V, v) = in_block;
  c.prior = Eigen::VectorXd::Constant(A, A > 0 ? 1.0 / static_cast<double>(A) : 0.0);
  return c;
}

GeneratorConfig GeneratorConfig::defaults() { return block_diagonal(5, 12, 0.8, 0.05, 0.1, 2000, 42); }

void GeneratorConfig::validate() const {
  if (n_archetypes < 1) throw std::invalid_argument("archetypes: must be >= 1");
  if (vocab_size < 2) throw std::invalid_argument("vocab_size: must be >= 2");
  if (n_scenes < 1) throw std::invalid_argument("scenes: must be >= 1");
  if (inclusion.rows() != static_cast<Eigen::Index>(n_archetypes) ||
      inclusion.cols() != static_cast<Eigen::Index>(vocab_size))
    throw std::invalid_argument("inclusion: shape must be archetypes x vocab_size");
  if (!inclusion.allFinite() || inclusion.minCoeff() < 0.0 || inclusion.maxCoeff() > 1.0)
    throw std::invalid_argument("inclusion: entries must lie in [0, 1]");
  if (prior.size() != static_cast<Eigen::Index>(n_archetypes))
    throw std::invalid_argument("prior: length must equal archetypes");
  if (!prior.allFinite() || prior.minCoeff() < 0.0 || std::abs(prior.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("prior: must be a probability vector");
  if (!(noise >= 0.0 && noise < 0.5)) throw std::invalid_argument("noise: must lie in [0, 0.5)");
}

GeneratorConfig parse_generator_config(std::istream& in) {
  std::size_t archetypes = 5, vocab = 12, scenes = 2000;
  double in_block = 0.8, off_block = 0.05, noise = 0.1;
  std::uint64_t seed = 42;
  std::optional<std::vector<double>> prior;
  std::optional<std::vector<std::vector<double>>> inclusion;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    auto number = [&] {
      auto v = parse_list(key, value);
      if (v.size() != 1) throw std::invalid_argument(key + ": expected one number");
      return v[0];
    };
    auto count = [&] {
      const double v = number();
      if (v < 0 || v != std::floor(v)) throw std::invalid_argument(key + ": expected a count");
      return static_cast<std::size_t>(v);
    };
    if (key == "archetypes") archetypes = count();
    else if (key == "vocab_size") vocab = count();
    else if (key == "scenes") scenes = count();
    else if (key == "in_block") in_block = number();
    else if (key == "off_block") off_block = number();
    else if (key == "noise") noise = number();
    else if (key == "seed") {
      try {
        seed = std::stoull(value);
      } catch (const std::exception&) {
        throw std::invalid_argument("seed: expected an unsigned integer");
      }
    } else if (key == "prior") prior = parse_list(key, value);
    else if (key == "inclusion") {
      std::vector<std::vector<double>> rows;
      std::string row;
      std::istringstream rs(value);
      while (std::getline(rs, row, ';')) rows.push_back(parse_list(key, row));
      inclusion = rows;
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }

  auto c = GeneratorConfig::block_diagonal(archetypes, vocab, in_block, off_block, noise, scenes, seed);
  if (prior) c.prior = Eigen::Map<const Eigen::VectorXd>(prior->data(), static_cast<Eigen::Index>(prior->size()));
  if (inclusion) {
    const auto rows = static_cast<Eigen::Index>(inclusion->size());
    const auto cols = rows ? static_cast<Eigen::Index>(inclusion->front().size()) : 0;
    c.inclusion.resize(rows, cols);
    for (Eigen::Index a = 0; a < rows; ++a) {
      if (static_cast<Eigen::Index>((*inclusion)[a].size()) != cols)
        throw std::invalid_argument("inclusion: ragged rows");
      for (Eigen::Index v = 0; v < cols; ++v) c.inclusion(a, v) = (*inclusion)[a][v];
    }
  }
  c.validate();
  return c;
}

std::string to_text(const GeneratorConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "archetypes=" << c.n_archetypes << "\nvocab_size=" << c.vocab_size
      << "\nnoise=" << c.noise << "\nscenes=" << c.n_scenes << "\nseed=" << c.seed << "\nprior=";
  for (Eigen::Index a = 0; a < c.prior.size(); ++a) out << (a ? "," : "") << c.prior[a];
  out << "\ninclusion=";
  for (Eigen::Index a = 0; a < c.inclusion.rows(); ++a) {
    if (a) out << ';';
    for (Eigen::Index v = 0; v < c.inclusion.cols(); ++v) out << (v ? "," : "") << c.inclusion(a, v);
  }
  out << '\n';
  return out.str();
}

std::string type_label(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "Type%02zu", v);
  return buf;
}

std::string scene_label(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene%05zu", i);
  return buf;
}

std::optional<std::size_t> SyntheticData::type_index(EntityId id) const {
  for (std::size_t v = 0; v < type_ids.size(); ++v)
    if (type_ids[v] == id) return v;
  return std::nullopt;
}

SyntheticData generate(const GeneratorConfig& config) {
  config.validate();
  const auto A = static_cast<Eigen::Index>(config.n_archetypes);
  const auto V = static_cast<Eigen::Index>(config.vocab_size);

  SyntheticData data;
  std::vector<std::vector<std::size_t>> included(config.n_scenes);
  data.archetypes.resize(config.n_scenes);

  for (std::size_t i = 0; i < config.n_scenes; ++i) {
    std::mt19937_64 rng(scene_seed(config.seed, i));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<std::size_t>& types = included[i];
    Eigen::Index a = 0;
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
      // inverse-CDF draw of the archetype
      const double u = uni(rng);
      double acc = 0.0;
      a = A - 1;
      for (Eigen::Index k = 0; k < A; ++k) {
        acc += config.prior[k];
        if (u < acc) {
          a = k;
          break;
        }
      }
      types.clear();
      for (Eigen::Index v = 0; v < V; ++v) {
        bool in = uni(rng) < config.inclusion(a, v);
        if (uni(rng) < config.noise) in = !in;
        if (in) types.push_back(static_cast<std::size_t>(v));
      }
      if (types.size() >= 2) break;
    }
    if (types.size() < 2) {
      std::vector<std::size_t> order(static_cast<std::size_t>(V));
      for (std::size_t v = 0; v < order.size(); ++v) order[v] = v;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return config.inclusion(a, static_cast<Eigen::Index>(x)) >
               config.inclusion(a, static_cast<Eigen::Index>(y));
      });
      types = {std::min(order[0], order[1]), std::max(order[0], order[1])};
    }
    data.archetypes[i] = static_cast<std::size_t>(a);

    // one or two instances per included type
    const std::string scene = scene_label(i);
    std::size_t object = 0;
    for (std::size_t v : types) {
      const int copies = std::uniform_int_distribution<int>(1, 2)(rng);
      for (int c = 0; c < copies; ++c) {
        const std::string instance = scene + "/obj" + std::to_string(object++);
        data.triples.push_back({scene, kIncludesRelation, instance});
        data.triples.push_back({instance, kTypeRelation, type_label(v)});
      }
    }
  }

  data.graph = build_graph(data.triples);
  data.type_ids.resize(config.vocab_size);
  for (std::size_t v = 0; v < config.vocab_size; ++v) data.type_ids[v] = data.graph.entity(type_label(v));
  for (std::size_t i = 0; i < config.n_scenes; ++i) {
    SceneRecord s;
    s.scene = *data.graph.entity(scene_label(i));
    for (std::size_t v : included[i]) s.observed.push_back(*data.type_ids[v]);
    normalize_set(s.observed);
    data.scenes.push_back(std::move(s));
  }
  return data;
}

OracleResult bayes_optimal_top1(const GeneratorConfig& config, std::span<const std::size_t> observed) {
  const auto A = static_cast<Eigen::Index>(config.n_archetypes);
  const auto V = static_cast<Eigen::Index>(config.vocab_size);
  std::vector<char> is_obs(config.vocab_size, 0);
  for (std::size_t v : observed) {
    if (v >= config.vocab_size) throw std::out_of_range("observed type index out of range");
    is_obs[v] = 1;
  }

  // Full scene = observed + v. Its likelihood under archetype a is a product
  // of independent Bernoullis; uniform masking and the |scene| >= 2 redraw
  // condition are constant across v and cancel.
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  auto safe_log = [](double x) { return x > 0 ? std::log(x) : -std::numeric_limits<double>::infinity(); };
  std::vector<double> log_weight(config.vocab_size, kNegInf);
  for (Eigen::Index v = 0; v < V; ++v) {
    if (is_obs[static_cast<std::size_t>(v)]) continue;
    std::vector<double> terms;
    for (Eigen::Index a = 0; a < A; ++a) {
      double lw = safe_log(config.prior[a]);
      for (Eigen::Index u = 0; u < V && lw > kNegInf; ++u) {
        const double q = config.included_probability(a, u);
        const bool present = is_obs[static_cast<std::size_t>(u)] || u == v;
        lw += safe_log(present ? q : 1.0 - q);
      }
      terms.push_back(lw);
    }
    const double peak = *std::max_element(terms.begin(), terms.end());
    if (peak == kNegInf) continue;
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - peak);
    log_weight[static_cast<std::size_t>(v)] = peak + std::log(sum);
  }

  OracleResult out;
  out.posterior.assign(config.vocab_size, 0.0);
  const double peak = *std::max_element(log_weight.begin(), log_weight.end());
  if (peak == kNegInf) {
    // observation impossible under the model; fall back to uniform
    std::size_t free = 0;
    for (char o : is_obs) free += !o;
    for (std::size_t v = 0; v < config.vocab_size && free > 0; ++v)
      if (!is_obs[v]) out.posterior[v] = 1.0 / static_cast<double>(free);
  } else {
    double z = 0.0;
    for (std::size_t v = 0; v < config.vocab_size; ++v)
      if (log_weight[v] > kNegInf) z += out.posterior[v] = std::exp(log_weight[v] - peak);
    for (double& p : out.posterior) p /= z;
  }
  out.best = static_cast<std::size_t>(
      std::max_element(out.posterior.begin(), out.posterior.end()) - out.posterior.begin());
  return out;
}

}  // namespace kep
