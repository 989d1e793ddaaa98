#include "kep/archive.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "kep/io.hpp"

namespace kep {

namespace {

constexpr std::string_view kMagic = "KEP-ARCHIVE";
constexpr std::string_view kEndHeader = "end_header";
constexpr float kMaxExactInteger = 16777216.0f;  // 2^24

[[noreturn]] void fail(ArchiveError::Kind kind, const std::string& what) {
  throw ArchiveError(kind, what);
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    fail(ArchiveError::Kind::kFormat, "header '" + key + "': expected an unsigned integer");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_le(std::ostream& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                         static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
  out.write(bytes, 4);
}

float from_le(const unsigned char* b) {
  const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                             (static_cast<std::uint32_t>(b[2]) << 16) |
                             (static_cast<std::uint32_t>(b[3]) << 24);
  return std::bit_cast<float>(bits);
}

template <typename Derived>
ArchiveBlock make_block(std::string name, const Eigen::DenseBase<Derived>& m) {
  ArchiveBlock b{std::move(name), static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), {}};
  b.data.reserve(b.rows * b.cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) b.data.push_back(static_cast<float>(m(i, j)));
  return b;
}

void expect_shape(const ArchiveBlock& b, std::size_t rows, std::size_t cols) {
  if (b.rows != rows || b.cols != cols)
    fail(ArchiveError::Kind::kShape, "shape mismatch: block '" + b.name + "' is " +
                                         std::to_string(b.rows) + "x" + std::to_string(b.cols) +
                                         ", header implies " + std::to_string(rows) + "x" +
                                         std::to_string(cols));
}

void expect_block_names(const Archive& a, std::initializer_list<std::string_view> names) {
  std::size_t i = 0;
  for (auto n : names) {
    if (i >= a.blocks.size() || a.blocks[i].name != n)
      fail(ArchiveError::Kind::kShape, "expected block '" + std::string(n) + "' at position " + std::to_string(i));
    ++i;
  }
  if (a.blocks.size() != names.size()) fail(ArchiveError::Kind::kShape, "unexpected extra blocks");
}

template <typename Matrix>
void fill_from(Matrix& m, const ArchiveBlock& b) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = static_cast<typename Matrix::Scalar>(b.data[static_cast<std::size_t>(i) * b.cols + static_cast<std::size_t>(j)]);
}

std::int64_t exact_integer(float v, const std::string& block) {
  if (!(v >= 0.0f && v < kMaxExactInteger) || v != std::floor(v))
    fail(ArchiveError::Kind::kFormat, "block '" + block + "' holds a non-integer or oversized count");
  return static_cast<std::int64_t>(v);
}

}  // namespace

void Archive::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : header)
    if (k == key) {
      v = value;
      return;
    }
  header.emplace_back(key, value);
}

std::optional<std::string> Archive::get(const std::string& key) const {
  for (const auto& [k, v] : header)
    if (k == key) return v;
  return std::nullopt;
}

const std::string& Archive::require(const std::string& key) const {
  for (const auto& [k, v] : header)
    if (k == key) return v;
  fail(ArchiveError::Kind::kFormat, "header is missing '" + key + "'");
}

const ArchiveBlock& Archive::block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  fail(ArchiveError::Kind::kShape, "archive has no block '" + name + "'");
}

void write_archive(const Archive& archive, std::ostream& out) {
  out << kMagic << '\n' << "format_version=" << kArchiveFormatVersion << '\n';
  for (const auto& [k, v] : archive.header) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw std::invalid_argument("archive header entries cannot contain '=' or newlines in keys");
    out << k << '=' << v << '\n';
  }
  out << "blocks=";
  for (std::size_t i = 0; i < archive.blocks.size(); ++i) {
    const auto& b = archive.blocks[i];
    if (b.data.size() != b.rows * b.cols) throw std::invalid_argument("block '" + b.name + "' size mismatch");
    out << (i ? "," : "") << b.name << ':' << b.rows << 'x' << b.cols;
  }
  out << '\n' << kEndHeader << '\n';
  for (const auto& b : archive.blocks)
    for (float f : b.data) write_le(out, f);
}

Archive read_archive(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) fail(ArchiveError::Kind::kFormat, "not a model archive");

  Archive a;
  std::optional<std::string> version, blocks;
  for (;;) {
    if (!std::getline(in, line)) fail(ArchiveError::Kind::kTruncated, "truncated header");
    if (line == kEndHeader) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) fail(ArchiveError::Kind::kFormat, "malformed header line");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "format_version") version = value;
    else if (key == "blocks") blocks = value;
    else a.header.emplace_back(std::move(key), std::move(value));
  }
  if (!version) fail(ArchiveError::Kind::kFormat, "header is missing 'format_version'");
  if (*version != std::to_string(kArchiveFormatVersion))
    fail(ArchiveError::Kind::kVersion, "unsupported format_version " + *version + " (expected " +
                                           std::to_string(kArchiveFormatVersion) + ")");
  if (!blocks) fail(ArchiveError::Kind::kFormat, "header is missing 'blocks'");

  if (!blocks->empty()) {
    std::istringstream specs(*blocks);
    std::string spec;
    while (std::getline(specs, spec, ',')) {
      const auto colon = spec.find(':');
      const auto x = spec.find('x', colon == std::string::npos ? 0 : colon);
      if (colon == std::string::npos || x == std::string::npos || colon == 0)
        fail(ArchiveError::Kind::kFormat, "malformed block spec '" + spec + "'");
      ArchiveBlock b;
      b.name = spec.substr(0, colon);
      b.rows = parse_count("blocks", spec.substr(colon + 1, x - colon - 1));
      b.cols = parse_count("blocks", spec.substr(x + 1));
      if (b.rows > (1u << 31) || b.cols > (1u << 31) || b.rows * b.cols > (std::size_t{1} << 40))
        fail(ArchiveError::Kind::kShape, "block '" + b.name + "' is implausibly large");
      a.blocks.push_back(std::move(b));
    }
  }

  // Read in bounded chunks so a lying header cannot force a huge allocation.
  constexpr std::size_t kChunk = 1 << 16;
  std::vector<unsigned char> buf(kChunk * 4);
  for (auto& b : a.blocks) {
    std::size_t remaining = b.rows * b.cols;
    while (remaining > 0) {
      const std::size_t n = std::min(remaining, kChunk);
      in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 4));
      if (static_cast<std::size_t>(in.gcount()) != n * 4)
        fail(ArchiveError::Kind::kTruncated, "truncated parameter block '" + b.name + "'");
      for (std::size_t i = 0; i < n; ++i) b.data.push_back(from_le(buf.data() + 4 * i));
      remaining -= n;
    }
  }
  if (in.peek() != std::char_traits<char>::eof())
    fail(ArchiveError::Kind::kFormat, "trailing bytes after the last parameter block");
  return a;
}

Archive to_archive(const EmbeddingModel<float>& m) {
  Archive a;
  a.set("model_kind", to_string(m.kind));
  a.set("dim", std::to_string(m.dim()));
  a.set("n", std::to_string(m.num_entities()));
  a.set("m", std::to_string(m.num_relations()));
  if (m.kind == ModelKind::kConvKB) a.set("tau", std::to_string(m.num_filters()));
  if (m.kind == ModelKind::kTransE) a.set("norm", to_string(m.norm));
  a.set("seed", std::to_string(m.seed));
  a.blocks.push_back(make_block("entities", m.entities));
  a.blocks.push_back(make_block("relations", m.relations));
  if (m.kind == ModelKind::kConvKB) {
    a.blocks.push_back(make_block("filters", m.filters));
    a.blocks.push_back(make_block("weights", m.weights.transpose()));
  }
  return a;
}

EmbeddingModel<float> embedding_from_archive(const Archive& a) {
  ModelKind kind;
  try {
    kind = parse_model_kind(a.require("model_kind"));
  } catch (const std::invalid_argument& e) {
    fail(ArchiveError::Kind::kFormat, e.what());
  }
  const auto d = parse_count("dim", a.require("dim"));
  const auto n = parse_count("n", a.require("n"));
  const auto m = parse_count("m", a.require("m"));
  const auto tau = kind == ModelKind::kConvKB ? parse_count("tau", a.require("tau")) : 0;

  if (kind == ModelKind::kConvKB)
    expect_block_names(a, {"entities", "relations", "filters", "weights"});
  else
    expect_block_names(a, {"entities", "relations"});
  expect_shape(a.blocks[0], n, d);
  expect_shape(a.blocks[1], m, d);
  if (kind == ModelKind::kConvKB) {
    expect_shape(a.blocks[2], tau, 3);
    expect_shape(a.blocks[3], 1, tau * d);
  }

  auto model = EmbeddingModel<float>::zeros(kind, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m),
                                            static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(tau));
  if (kind == ModelKind::kTransE) {
    try {
      model.norm = parse_norm_kind(a.require("norm"));
    } catch (const std::invalid_argument& e) {
      fail(ArchiveError::Kind::kFormat, e.what());
    }
  }
  model.seed = parse_count("seed", a.require("seed"));
  fill_from(model.entities, a.blocks[0]);
  fill_from(model.relations, a.blocks[1]);
  if (kind == ModelKind::kConvKB) {
    fill_from(model.filters, a.blocks[2]);
    for (Eigen::Index i = 0; i < model.weights.size(); ++i)
      model.weights[i] = a.blocks[3].data[static_cast<std::size_t>(i)];
  }
  return model;
}

Archive to_archive(const CooccurrenceModel& m) {
  auto check = [](std::int64_t v, const char* what) {
    if (v < 0 || v >= static_cast<std::int64_t>(kMaxExactInteger))
      throw DataError(std::string(what) + " exceeds the exact float range (2^24)");
  };
  for (EntityId id : m.labels) check(id, "label id");
  for (Eigen::Index i = 0; i < m.label_counts.size(); ++i) check(m.label_counts[i], "label count");
  for (Eigen::Index i = 0; i < m.pair_counts.size(); ++i) check(m.pair_counts.data()[i], "pair count");

  Archive a;
  a.set("model_kind", "cooccurrence");
  a.set("vocab_size", std::to_string(m.vocab_size()));
  a.set("n_scenes", std::to_string(m.n_scenes));
  a.set("alpha", format_double(m.alpha));
  Eigen::RowVectorXd labels(m.vocab_size());
  for (Eigen::Index i = 0; i < labels.size(); ++i) labels[i] = m.labels[static_cast<std::size_t>(i)];
  a.blocks.push_back(make_block("labels", labels));
  a.blocks.push_back(make_block("label_counts", m.label_counts.transpose()));
  a.blocks.push_back(make_block("pair_counts", m.pair_counts));
  return a;
}

CooccurrenceModel cooccurrence_from_archive(const Archive& a) {
  if (a.require("model_kind") != "cooccurrence")
    fail(ArchiveError::Kind::kFormat, "archive does not hold a co-occurrence model");
  const auto L = parse_count("vocab_size", a.require("vocab_size"));
  expect_block_names(a, {"labels", "label_counts", "pair_counts"});
  expect_shape(a.blocks[0], 1, L);
  expect_shape(a.blocks[1], 1, L);
  expect_shape(a.blocks[2], L, L);

  CooccurrenceModel m;
  m.n_scenes = static_cast<std::int64_t>(parse_count("n_scenes", a.require("n_scenes")));
  const std::string& alpha = a.require("alpha");
  char* end = nullptr;
  m.alpha = std::strtod(alpha.c_str(), &end);
  if (alpha.empty() || *end != '\0' || !(m.alpha > 0))
    fail(ArchiveError::Kind::kFormat, "header 'alpha': expected a positive number");
  const auto n = static_cast<Eigen::Index>(L);
  m.label_counts = CountVector::Zero(n);
  m.pair_counts = CountMatrix::Zero(n, n);
  for (std::size_t i = 0; i < L; ++i) {
    m.labels.push_back(static_cast<EntityId>(exact_integer(a.blocks[0].data[i], "labels")));
    m.label_counts[static_cast<Eigen::Index>(i)] = exact_integer(a.blocks[1].data[i], "label_counts");
    for (std::size_t j = 0; j < L; ++j)
      m.pair_counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          exact_integer(a.blocks[2].data[i * L + j], "pair_counts");
  }
  if (!std::is_sorted(m.labels.begin(), m.labels.end()) ||
      std::adjacent_find(m.labels.begin(), m.labels.end()) != m.labels.end())
    fail(ArchiveError::Kind::kFormat, "label ids must be strictly increasing");
  return m;
}

namespace {

template <typename Model>
void save_any(const Model& model, const std::filesystem::path& path,
              const std::vector<std::pair<std::string, std::string>>& extra) {
  Archive a = to_archive(model);
  for (const auto& [k, v] : extra) a.set(k, v);
  auto out = open_output(path, true);
  write_archive(a, out);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

Archive read_path(const std::filesystem::path& path) {
  auto in = open_input(path, true);
  try {
    return read_archive(in);
  } catch (const ArchiveError& e) {
    throw ArchiveError(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace

void save_model(const EmbeddingModel<float>& model, const std::filesystem::path& path,
                const std::vector<std::pair<std::string, std::string>>& extra) {
  save_any(model, path, extra);
}

EmbeddingModel<float> load_model(const std::filesystem::path& path) {
  return embedding_from_archive(read_path(path));
}

void save_cooccurrence(const CooccurrenceModel& model, const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, std::string>>& extra) {
  save_any(model, path, extra);
}

CooccurrenceModel load_cooccurrence(const std::filesystem::path& path) {
  return cooccurrence_from_archive(read_path(path));
}

std::string archive_kind(const std::filesystem::path& path) {
  return read_path(path).require("model_kind");
}

}  // namespace kep
