#include "kep/io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

namespace kep {

std::ifstream open_input(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::vector<LabelTriple> parse_triples(std::istream& in) {
  std::vector<LabelTriple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto tab = rest.find('\t');
      fields.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (fields.size() != 3) throw DataError(where + "expected 3 fields");
    for (auto f : fields)
      if (f.empty()) throw DataError(where + "empty field");
    out.push_back({std::string(fields[0]), std::string(fields[1]), std::string(fields[2])});
  }
  if (in.bad()) throw IoError("read error");
  return out;
}

std::vector<LabelTriple> load_triples(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_triples(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_triples(std::span<const LabelTriple> triples, std::ostream& out,
                   std::span<const std::string> comment) {
  for (const auto& c : comment) out << "# " << c << '\n';
  for (const auto& t : triples) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

void save_triples(std::span<const LabelTriple> triples, const std::filesystem::path& path,
                  std::span<const std::string> comment) {
  auto out = open_output(path);
  write_triples(triples, out, comment);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

namespace {

nlohmann::ordered_json labels_of(const IdSet& ids, const KnowledgeGraph& g) {
  auto arr = nlohmann::ordered_json::array();
  for (EntityId id : ids) arr.push_back(g.nodes().label(id));
  return arr;
}

}  // namespace

void write_scenes(std::span<const SceneRecord> scenes, const KnowledgeGraph& g, std::ostream& out,
                  std::span<const std::string> comment) {
  for (const auto& c : comment) out << "# " << c << '\n';
  for (const auto& s : scenes) {
    nlohmann::ordered_json j;
    j["scene_id"] = g.nodes().label(s.scene);
    j["observed"] = labels_of(s.observed, g);
    j["masked"] = labels_of(s.masked, g);
    try {
      out << j.dump() << '\n';
    } catch (const nlohmann::json::exception&) {
      throw DataError("scene '" + g.nodes().label(s.scene) + "' has a label that is not valid UTF-8");
    }
  }
}

std::vector<SceneRecord> parse_scenes(std::istream& in, const KnowledgeGraph& g) {
  std::vector<SceneRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";

    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError(where + "not a JSON object");
    auto resolve = [&](const nlohmann::json& v) -> EntityId {
      if (!v.is_string()) throw DataError(where + "labels must be strings");
      const auto& label = v.get_ref<const std::string&>();
      auto id = g.entity(label);
      if (!id) throw DataError(where + "unknown label '" + label + "'");
      return *id;
    };
    auto resolve_array = [&](const char* key) {
      IdSet ids;
      auto it = j.find(key);
      if (it == j.end() || !it->is_array())
        throw DataError(where + "missing array '" + key + "'");
      for (const auto& v : *it) ids.push_back(resolve(v));
      const std::size_t n = ids.size();
      normalize_set(ids);
      if (ids.size() != n) throw DataError(where + "duplicate label in '" + key + "'");
      return ids;
    };

    auto sid = j.find("scene_id");
    if (sid == j.end()) throw DataError(where + "missing 'scene_id'");
    SceneRecord s;
    s.scene = resolve(*sid);
    s.observed = resolve_array("observed");
    s.masked = resolve_array("masked");
    for (EntityId m : s.masked)
      if (set_contains(s.observed, m))
        throw DataError(where + "label '" + g.nodes().label(m) + "' is both observed and masked");
    out.push_back(std::move(s));
  }
  if (in.bad()) throw IoError("read error");
  return out;
}

void save_scenes(std::span<const SceneRecord> scenes, const KnowledgeGraph& g,
                 const std::filesystem::path& path, std::span<const std::string> comment) {
  auto out = open_output(path);
  write_scenes(scenes, g, out, comment);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<SceneRecord> load_scenes(const std::filesystem::path& path, const KnowledgeGraph& g) {
  auto in = open_input(path);
  try {
    return parse_scenes(in, g);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace kep
