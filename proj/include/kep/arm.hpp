#pragma once
// Association rule mining over scene transactions: level-wise Apriori,
// rule generation and masked consequent aggregation.
//
// Supports and confidences are exact rationals built from integer counts, so
// threshold comparisons never go through floating point.

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kep/graph.hpp"
#include "kep/types.hpp"

namespace kep {

// Sorted, duplicate-free.
using Itemset = std::vector<EntityId>;

class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::uint64_t num, std::uint64_t den);

  // Accepts "p/q", integers, and plain decimals such as "0.05".
  static Rational parse(std::string_view text);

  std::uint64_t num() const { return num_; }
  std::uint64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const auto lhs = static_cast<unsigned __int128>(a.num_) * b.den_;
    const auto rhs = static_cast<unsigned __int128>(b.num_) * a.den_;
    return lhs <=> rhs;
  }
  friend bool operator==(const Rational& a, const Rational& b) { return (a <=> b) == 0; }

 private:
  std::uint64_t num_ = 0;
  std::uint64_t den_ = 1;
};

using ItemsetCounts = std::map<Itemset, std::uint64_t>;

// Every itemset whose support count reaches ceil(min_support * |T|).
// Throws std::invalid_argument unless 0 < min_support <= 1 and T is non-empty.
ItemsetCounts mine_frequent_itemsets(std::span<const Itemset> transactions, Rational min_support);

struct AssociationRule {
  Itemset antecedent;
  Itemset consequent;
  std::uint64_t joint_count = 0;       // transactions containing antecedent u consequent
  std::uint64_t antecedent_count = 0;  // transactions containing antecedent
  std::uint64_t n_transactions = 0;

  Rational support() const { return {joint_count, n_transactions}; }
  Rational confidence() const { return {joint_count, antecedent_count}; }

  friend bool operator==(const AssociationRule&, const AssociationRule&) = default;
};

struct RuleSet {
  std::vector<AssociationRule> rules;
  std::uint64_t n_transactions = 0;
};

// A => F \ A for every frequent F (|F| >= 2) and non-empty proper subset A
// with confidence >= min_confidence. Throws std::invalid_argument when a
// subset count is missing (input not downward closed).
RuleSet generate_rules(const ItemsetCounts& frequent, std::uint64_t n_transactions,
                       Rational min_confidence);

// Rules whose antecedent is contained in `observed` vote for their consequent
// items outside `observed`. Each item is scored by its best rule: highest
// confidence, then highest support; items are ranked by that, then by id.
RankedPrediction predict_arm(const RuleSet& rules, const IdSet& observed);

// Tab-separated: antecedent labels (comma-joined), consequent labels,
// support "num/den", confidence "num/den". Header line starts with '#'.
void write_rules(const RuleSet& rules, const Vocabulary& nodes, std::ostream& out,
                 std::span<const std::string> comment = {});
RuleSet read_rules(std::istream& in, const Vocabulary& nodes);

}  // namespace kep
