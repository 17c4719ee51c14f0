#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rwre/crossing_types.hpp"
#include "rwre/error.hpp"
#include "rwre/walk.hpp"

namespace rwre {

using TypeCounts = std::vector<std::int64_t>;

/// Per-level type counts U(i), i <= 0, plus the immigrant U(1).
struct BranchingRecord {
  int R = 2;
  /// Levels with all-zero counts are not stored.
  std::map<std::int64_t, TypeCounts> counts;
  int immigration_type = 0;

  /// U(level); level 1 is the immigrant.
  TypeCounts at(std::int64_t level) const {
    if (level == 1) return immigration();
    auto it = counts.find(level);
    return it != counts.end() ? it->second : TypeCounts(static_cast<std::size_t>(num_types(R)), 0);
  }

  TypeCounts immigration() const {
    TypeCounts u(static_cast<std::size_t>(num_types(R)), 0);
    u[static_cast<std::size_t>(immigration_type)] = 1;
    return u;
  }

  /// Sum of U(i) over i <= 0.
  TypeCounts totals() const {
    TypeCounts t(static_cast<std::size_t>(num_types(R)), 0);
    for (const auto& [level, u] : counts) {
      for (std::size_t k = 0; k < u.size(); ++k) t[k] += u[k];
    }
    return t;
  }

  std::int64_t down_steps() const {
    std::int64_t n = 0;
    for (std::int64_t c : totals()) n += c;
    return n;
  }
};

/// Classifies every down-step of a ladder path by its crossing-back jump.
///
/// One left-to-right scan. Pending down-steps are kept on a stack of levels
/// (strictly decreasing towards the top); an up-jump from x to y resolves
/// every pending level <= y, each one as type (overshoot y - level,
/// depth level - x). The final jump is the immigrant, classified relative
/// to level 1.
inline BranchingRecord decompose_general(const WalkPath& path, int R) {
  require_jump_bound(R);
  validate_ladder_path(path, R);
  BranchingRecord rec;
  rec.R = R;
  const auto n_types = static_cast<std::size_t>(num_types(R));
  std::vector<std::int64_t> pending;
  const auto& s = path.sites;
  for (std::size_t k = 1; k < s.size(); ++k) {
    const std::int64_t x = s[k - 1];
    const std::int64_t y = s[k];
    if (y < x) {
      pending.push_back(x);
      continue;
    }
    while (!pending.empty() && pending.back() <= y) {
      const std::int64_t level = pending.back();
      pending.pop_back();
      const CrossingType t{static_cast<int>(y - level), static_cast<int>(level - x)};
      auto& u = rec.counts[level];
      if (u.empty()) u.assign(n_types, 0);
      ++u[static_cast<std::size_t>(type_index(t, R))];
    }
  }
  if (!pending.empty()) throw Error(ErrorCode::kMalformedPath, "unresolved down-steps at path end");
  const CrossingType immigrant{static_cast<int>(path.ending_position() - 1),
                               static_cast<int>(1 - path.ending_origin())};
  rec.immigration_type = type_index(immigrant, R);
  return rec;
}

/// U(i) = [A(i), B(i), C(i)] for a path with jumps bounded by 2.
inline BranchingRecord decompose_r2(const WalkPath& path) { return decompose_general(path, 2); }

/// t1 == 1 + <weights, sum_i U(i)>, exactly.
inline bool verify_time_identity(const WalkPath& path, const BranchingRecord& rec,
                                 const std::vector<long long>& weights) {
  const TypeCounts totals = rec.totals();
  if (weights.size() != totals.size()) {
    throw Error(ErrorCode::kInvalidArgument, "weight vector length must equal the number of types");
  }
  std::int64_t steps = 1;
  for (std::size_t k = 0; k < totals.size(); ++k) steps += weights[k] * totals[k];
  return steps == path.t1();
}

inline bool verify_time_identity(const WalkPath& path, const BranchingRecord& rec) {
  return verify_time_identity(path, rec, time_identity_weights(rec.R));
}

/// Outcome U(i) observed under a single parent at level i+1.
using Outcome = TypeCounts;
using OutcomeCounts = std::map<Outcome, std::int64_t>;

/// Conditional frequencies of U(i) given U(i+1) = e_parent, per level.
class OffspringTable {
 public:
  explicit OffspringTable(int R) : R_(R) {}

  int jump_bound() const noexcept { return R_; }

  void add(const BranchingRecord& rec) {
    if (rec.R != R_) throw Error(ErrorCode::kInvalidArgument, "record jump bound mismatch");
    const std::int64_t lowest = rec.counts.empty() ? 0 : rec.counts.begin()->first;
    TypeCounts parent = rec.immigration();
    for (std::int64_t level = 0; level >= lowest - 1; --level) {
      TypeCounts child = rec.at(level);
      int single = -1;
      std::int64_t size = 0;
      for (std::size_t k = 0; k < parent.size(); ++k) {
        size += parent[k];
        if (parent[k] == 1) single = static_cast<int>(k);
      }
      if (size == 1) {
        auto& slots = table_[level];
        if (slots.empty()) slots.resize(static_cast<std::size_t>(num_types(R_)));
        ++slots[static_cast<std::size_t>(single)][child];
      }
      parent = std::move(child);
    }
  }

  void merge(const OffspringTable& other) {
    for (const auto& [level, slots] : other.table_) {
      auto& mine = table_[level];
      if (mine.empty()) mine.resize(slots.size());
      for (std::size_t p = 0; p < slots.size(); ++p) {
        for (const auto& [outcome, n] : slots[p]) mine[p][outcome] += n;
      }
    }
  }

  std::vector<std::int64_t> levels() const {
    std::vector<std::int64_t> out;
    for (const auto& kv : table_) out.push_back(kv.first);
    return out;
  }

  OutcomeCounts outcomes(std::int64_t level, int parent) const {
    auto it = table_.find(level);
    if (it == table_.end()) return {};
    return it->second[static_cast<std::size_t>(parent)];
  }

  /// Outcomes pooled over every level (meaningful when the offspring law
  /// is the same at every level, e.g. constant environments).
  OutcomeCounts pooled(int parent) const {
    OutcomeCounts out;
    for (const auto& [level, slots] : table_) {
      for (const auto& [outcome, n] : slots[static_cast<std::size_t>(parent)]) out[outcome] += n;
    }
    return out;
  }

  std::int64_t total_events() const {
    std::int64_t n = 0;
    for (const auto& [level, slots] : table_) {
      for (const auto& s : slots) n += count(s);
    }
    return n;
  }

  static std::int64_t count(const OutcomeCounts& c) {
    std::int64_t n = 0;
    for (const auto& kv : c) n += kv.second;
    return n;
  }

 private:
  int R_;
  std::map<std::int64_t, std::vector<OutcomeCounts>> table_;
};

/// Builds the offspring table over a batch of ladder paths from one
/// environment. Throws InsufficientData below `min_events` conditioning
/// events in total.
inline OffspringTable empirical_offspring(std::span<const WalkPath> paths, int R, std::int64_t min_events = 1) {
  OffspringTable table(R);
  for (const auto& p : paths) table.add(decompose_general(p, R));
  if (table.total_events() < min_events) {
    throw Error(ErrorCode::kInsufficientData, "only " + std::to_string(table.total_events()) +
                                                  " conditioning events, need " + std::to_string(min_events));
  }
  return table;
}

/// All base-count vectors (u_1..u_R) with u_1 + ... + u_R <= max_total.
inline std::vector<std::vector<std::int64_t>> base_compositions(int R, std::int64_t max_total) {
  std::vector<std::vector<std::int64_t>> out;
  std::vector<std::int64_t> cur(static_cast<std::size_t>(R), 0);
  std::function<void(int, std::int64_t)> rec = [&](int pos, std::int64_t left) {
    if (pos == R) {
      out.push_back(cur);
      return;
    }
    for (std::int64_t u = 0; u <= left; ++u) {
      cur[static_cast<std::size_t>(pos)] = u;
      rec(pos + 1, left - u);
    }
    cur[static_cast<std::size_t>(pos)] = 0;
  };
  rec(0, max_total);
  return out;
}

inline std::int64_t base_total(const Outcome& o, int R) {
  std::int64_t s = 0;
  for (int k = 0; k < R; ++k) s += o[static_cast<std::size_t>(k)];
  return s;
}

/// Total-variation distance between an empirical conditional law and `pmf`,
/// restricted to outcomes whose base counts sum to at most `max_base_total`.
/// `support` lists the analytic outcomes to consider alongside the observed
/// ones.
inline double offspring_total_variation(const OutcomeCounts& observed, int R, std::int64_t max_base_total,
                                        const std::vector<Outcome>& support,
                                        const std::function<double(const Outcome&)>& pmf) {
  const std::int64_t n = OffspringTable::count(observed);
  if (n == 0) throw Error(ErrorCode::kInsufficientData, "no conditioning events");
  std::set<Outcome> keys;
  for (const auto& o : support) {
    if (base_total(o, R) <= max_base_total) keys.insert(o);
  }
  for (const auto& [o, c] : observed) {
    if (base_total(o, R) <= max_base_total) keys.insert(o);
  }
  double tv = 0.0;
  for (const auto& o : keys) {
    auto it = observed.find(o);
    const double emp = it == observed.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(n);
    tv += std::abs(emp - pmf(o));
  }
  return 0.5 * tv;
}

}  // namespace rwre
