#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kep {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct LabelTriple {
  std::string head;
  std::string relation;
  std::string tail;

  friend auto operator<=>(const LabelTriple&, const LabelTriple&) = default;
};

struct ScoredEntity {
  EntityId id = 0;
  double score = 0.0;

  friend bool operator==(const ScoredEntity&, const ScoredEntity&) = default;
};

// Ordered best-first. Every solver returns this.
using RankedPrediction = std::vector<ScoredEntity>;

// Sorted, duplicate-free id list used wherever set semantics are needed.
using IdSet = std::vector<EntityId>;

// Error taxonomy. The CLI maps each class to its own exit code.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArchiveError : public DataError {
 public:
  enum class Kind { kVersion, kShape, kTruncated, kFormat };
  ArchiveError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Sorts and deduplicates in place.
inline void normalize_set(IdSet& ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
}

inline bool set_contains(const IdSet& ids, EntityId id) {
  return std::binary_search(ids.begin(), ids.end(), id);
}

}  // namespace kep
