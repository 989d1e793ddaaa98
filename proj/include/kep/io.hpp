#pragma once
// Text formats.
//
// Triple file: UTF-8, one `head<TAB>relation<TAB>tail` per line; blank lines
// and lines starting with '#' are skipped.
//
// Scene dataset: JSON lines, {"scene_id": str, "observed": [str], "masked": [str]}.
// Labels resolve against a graph's node vocabulary. Lines starting with '#'
// and blank lines are skipped, as in triple files.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "kep/graph.hpp"
#include "kep/types.hpp"

namespace kep {

std::vector<LabelTriple> parse_triples(std::istream& in);
std::vector<LabelTriple> load_triples(const std::filesystem::path& path);

// `comment` lines are written first, each prefixed with "# ".
void write_triples(std::span<const LabelTriple> triples, std::ostream& out,
                   std::span<const std::string> comment = {});
void save_triples(std::span<const LabelTriple> triples, const std::filesystem::path& path,
                  std::span<const std::string> comment = {});

void write_scenes(std::span<const SceneRecord> scenes, const KnowledgeGraph& g, std::ostream& out,
                  std::span<const std::string> comment = {});
std::vector<SceneRecord> parse_scenes(std::istream& in, const KnowledgeGraph& g);
void save_scenes(std::span<const SceneRecord> scenes, const KnowledgeGraph& g,
                 const std::filesystem::path& path, std::span<const std::string> comment = {});
std::vector<SceneRecord> load_scenes(const std::filesystem::path& path, const KnowledgeGraph& g);

// Opens for reading/writing or throws IoError naming the path.
std::ifstream open_input(const std::filesystem::path& path, bool binary = false);
std::ofstream open_output(const std::filesystem::path& path, bool binary = false);

}  // namespace kep
