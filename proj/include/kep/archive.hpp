#pragma once
// Model archive: a plain-text header followed by raw parameter blocks.
//
//   KEP-ARCHIVE
//   format_version=1
//   model_kind=hole
//   ...                       (key=value, one per line)
//   blocks=entities:2012x100,relations:3x100
//   end_header
//   <block 0><block 1>...     little-endian IEEE-754 float32, row-major
//
// The `blocks` line fixes block order and shape. Per model kind:
//   transe, hole   entities (n x d), relations (m x d)
//   convkb         entities, relations, filters (tau x 3), weights (1 x tau*d)
//   cooccurrence   labels (1 x L), label_counts (1 x L), pair_counts (L x L)
// Integer payloads (ids, counts) are stored as floats and must be < 2^24.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kep/cc.hpp"
#include "kep/kge.hpp"

namespace kep {

inline constexpr int kArchiveFormatVersion = 1;

struct ArchiveBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;
};

struct Archive {
  // Excludes format_version and blocks, which are derived on write.
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<ArchiveBlock> blocks;

  void set(const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& key) const;
  // Throws ArchiveError(kFormat) when missing.
  const std::string& require(const std::string& key) const;
  const ArchiveBlock& block(const std::string& name) const;
};

void write_archive(const Archive& archive, std::ostream& out);
// Throws ArchiveError; never reads past a declared size.
Archive read_archive(std::istream& in);

Archive to_archive(const EmbeddingModel<float>& model);
EmbeddingModel<float> embedding_from_archive(const Archive& archive);

Archive to_archive(const CooccurrenceModel& model);
CooccurrenceModel cooccurrence_from_archive(const Archive& archive);

// `extra` header entries (fingerprint, ...) are appended after the model's own.
void save_model(const EmbeddingModel<float>& model, const std::filesystem::path& path,
                const std::vector<std::pair<std::string, std::string>>& extra = {});
EmbeddingModel<float> load_model(const std::filesystem::path& path);

void save_cooccurrence(const CooccurrenceModel& model, const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, std::string>>& extra = {});
CooccurrenceModel load_cooccurrence(const std::filesystem::path& path);

// model_kind of the archive at `path`.
std::string archive_kind(const std::filesystem::path& path);

}  // namespace kep
