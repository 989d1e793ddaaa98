#include "kep/arm.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace kep {

Rational::Rational(std::uint64_t num, std::uint64_t den) : num_(num), den_(den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
}

Rational Rational::parse(std::string_view text) {
  auto parse_u64 = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
      throw std::invalid_argument("not a rational: '" + std::string(text) + "'");
    return v;
  };
  if (auto slash = text.find('/'); slash != std::string_view::npos)
    return Rational(parse_u64(text.substr(0, slash)), parse_u64(text.substr(slash + 1)));
  auto dot = text.find('.');
  if (dot == std::string_view::npos) return Rational(parse_u64(text), 1);
  const auto frac = text.substr(dot + 1);
  if (frac.size() > 18) throw std::invalid_argument("too many decimals: '" + std::string(text) + "'");
  std::uint64_t den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  const auto whole = text.substr(0, dot);
  const std::uint64_t w = whole.empty() ? 0 : parse_u64(whole);
  const std::uint64_t f = frac.empty() ? 0 : parse_u64(frac);
  const std::uint64_t g = std::gcd(w * den + f, den);
  return Rational((w * den + f) / g, den / g);
}

namespace {

bool contains_all(const Itemset& transaction, const Itemset& items) {
  return std::includes(transaction.begin(), transaction.end(), items.begin(), items.end());
}

}  // namespace

ItemsetCounts mine_frequent_itemsets(std::span<const Itemset> transactions, Rational min_support) {
  if (transactions.empty()) throw std::invalid_argument("no transactions");
  if (min_support.num() == 0 || min_support > Rational(1, 1))
    throw std::invalid_argument("min_support must lie in (0, 1]");

  // ceil(num * N / den) with integer arithmetic
  const auto scaled = static_cast<unsigned __int128>(min_support.num()) * transactions.size();
  const auto threshold =
      static_cast<std::uint64_t>((scaled + min_support.den() - 1) / min_support.den());

  ItemsetCounts frequent;
  std::map<EntityId, std::uint64_t> singles;
  for (const auto& t : transactions)
    for (EntityId item : t) ++singles[item];

  std::vector<Itemset> level;
  for (const auto& [item, count] : singles)
    if (count >= threshold) {
      frequent.emplace(Itemset{item}, count);
      level.push_back({item});
    }

  while (!level.empty()) {
    // Join (k-1)-itemsets sharing a (k-2)-prefix; level is sorted, so joins
    // only pair neighbours within the same prefix run.
    std::vector<Itemset> candidates;
    for (std::size_t i = 0; i < level.size(); ++i) {
      for (std::size_t j = i + 1; j < level.size(); ++j) {
        const auto& a = level[i];
        const auto& b = level[j];
        if (!std::equal(a.begin(), a.end() - 1, b.begin(), b.end() - 1)) break;
        Itemset c = a;
        c.push_back(b.back());
        // prune: every (k-1)-subset must be frequent
        bool keep = true;
        for (std::size_t drop = 0; drop + 2 < c.size() && keep; ++drop) {
          Itemset sub;
          sub.reserve(c.size() - 1);
          for (std::size_t k = 0; k < c.size(); ++k)
            if (k != drop) sub.push_back(c[k]);
          keep = frequent.contains(sub);
        }
        if (keep) candidates.push_back(std::move(c));
      }
    }

    std::vector<Itemset> next;
    for (auto& c : candidates) {
      std::uint64_t count = 0;
      for (const auto& t : transactions)
        if (contains_all(t, c)) ++count;
      if (count >= threshold) {
        frequent.emplace(c, count);
        next.push_back(std::move(c));
      }
    }
    level = std::move(next);
  }
  return frequent;
}

RuleSet generate_rules(const ItemsetCounts& frequent, std::uint64_t n_transactions,
                       Rational min_confidence) {
  RuleSet out;
  out.n_transactions = n_transactions;
  for (const auto& [items, joint] : frequent) {
    if (items.size() < 2) continue;
    if (items.size() > 62) throw std::invalid_argument("itemset too large for rule enumeration");
    const std::uint64_t full = (std::uint64_t{1} << items.size()) - 1;
    for (std::uint64_t mask = 1; mask < full; ++mask) {
      Itemset ante, cons;
      for (std::size_t k = 0; k < items.size(); ++k)
        ((mask >> k) & 1 ? ante : cons).push_back(items[k]);
      auto it = frequent.find(ante);
      if (it == frequent.end())
        throw std::invalid_argument("frequent itemsets are not downward closed");
      AssociationRule rule{std::move(ante), std::move(cons), joint, it->second, n_transactions};
      if (rule.confidence() >= min_confidence) out.rules.push_back(std::move(rule));
    }
  }
  return out;
}

RankedPrediction predict_arm(const RuleSet& rules, const IdSet& observed) {
  struct Best {
    Rational confidence;
    Rational support;
  };
  std::map<EntityId, Best> best;
  for (const auto& rule : rules.rules) {
    if (!contains_all(observed, rule.antecedent)) continue;
    const Rational conf = rule.confidence();
    const Rational sup = rule.support();
    for (EntityId item : rule.consequent) {
      if (set_contains(observed, item)) continue;
      auto [it, fresh] = best.try_emplace(item, Best{conf, sup});
      if (!fresh && (conf > it->second.confidence ||
                     (conf == it->second.confidence && sup > it->second.support)))
        it->second = Best{conf, sup};
    }
  }

  std::vector<std::pair<EntityId, Best>> ranked(best.begin(), best.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.confidence != b.second.confidence)
      return a.second.confidence > b.second.confidence;
    if (a.second.support != b.second.support) return a.second.support > b.second.support;
    return a.first < b.first;
  });
  RankedPrediction out;
  out.reserve(ranked.size());
  for (const auto& [id, b] : ranked) out.push_back({id, b.confidence.value()});
  return out;
}

namespace {

std::string join_labels(const Itemset& items, const Vocabulary& nodes) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) s += ',';
    s += nodes.label(items[i]);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto p = s.find(sep);
    out.push_back(s.substr(0, p));
    if (p == std::string_view::npos) return out;
    s.remove_prefix(p + 1);
  }
}

}  // namespace

void write_rules(const RuleSet& rules, const Vocabulary& nodes, std::ostream& out,
                 std::span<const std::string> comment) {
  for (const auto& c : comment) out << "# " << c << '\n';
  out << "# n_transactions=" << rules.n_transactions << '\n';
  for (const auto& r : rules.rules) {
    out << join_labels(r.antecedent, nodes) << '\t' << join_labels(r.consequent, nodes) << '\t'
        << r.joint_count << '/' << r.n_transactions << '\t' << r.joint_count << '/'
        << r.antecedent_count << '\n';
  }
}

RuleSet read_rules(std::istream& in, const Vocabulary& nodes) {
  RuleSet out;
  std::string line;
  std::size_t lineno = 0;
  bool have_total = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view key = "# n_transactions=";
      if (line.starts_with(key)) {
        try {
          out.n_transactions = Rational::parse(line.substr(key.size())).num();
        } catch (const std::invalid_argument&) {
          throw DataError(where + "bad n_transactions");
        }
        have_total = true;
      }
      continue;
    }
    const auto fields = split(line, '\t');
    if (fields.size() != 4) throw DataError(where + "expected 4 fields");
    auto items = [&](std::string_view s) {
      Itemset set;
      for (auto label : split(s, ',')) {
        auto id = nodes.find(label);
        if (!id) throw DataError(where + "unknown label '" + std::string(label) + "'");
        set.push_back(*id);
      }
      normalize_set(set);
      return set;
    };
    auto ratio = [&](std::string_view s) {
      if (s.find('/') == std::string_view::npos)
        throw DataError(where + "expected num/den, got '" + std::string(s) + "'");
      try {
        const Rational q = Rational::parse(s);  // "p/q" is kept unreduced
        return std::pair{q.num(), q.den()};
      } catch (const std::invalid_argument&) {
        throw DataError(where + "expected num/den, got '" + std::string(s) + "'");
      }
    };
    AssociationRule r;
    r.antecedent = items(fields[0]);
    r.consequent = items(fields[1]);
    const auto [sup_num, sup_den] = ratio(fields[2]);
    const auto [conf_num, conf_den] = ratio(fields[3]);
    if (sup_num != conf_num) throw DataError(where + "support and confidence numerators differ");
    r.joint_count = sup_num;
    r.n_transactions = sup_den;
    r.antecedent_count = conf_den;
    if (have_total && sup_den != out.n_transactions)
      throw DataError(where + "support denominator disagrees with n_transactions");
    out.n_transactions = sup_den;
    have_total = true;
    out.rules.push_back(std::move(r));
  }
  return out;
}

}  // namespace kep
