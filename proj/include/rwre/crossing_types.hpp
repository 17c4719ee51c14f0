#pragma once

#include <cstddef>
#include <vector>

#include "rwre/error.hpp"

namespace rwre {

/// A down-step i -> i-1 is "crossed back" by the first later jump landing at
/// or above i. The jump starts at i - depth and lands at i + overshoot, with
/// depth >= 1, overshoot >= 0 and depth + overshoot <= R.
///
/// Types are ordered by overshoot ascending, then depth ascending:
///   overshoot 0: depth 1..R        (indices 0 .. R-1, the base types)
///   overshoot 1: depth 1..R-1
///   ...
///   overshoot R-1: depth 1         (last index)
/// For R = 2 this is [A, B, C] = [(0,1), (0,2), (1,1)].
struct CrossingType {
  int overshoot = 0;
  int depth = 1;
  friend bool operator==(const CrossingType&, const CrossingType&) = default;
};

constexpr int num_types(int R) noexcept { return R * (R + 1) / 2; }

constexpr bool is_valid_type(CrossingType t, int R) noexcept {
  return t.depth >= 1 && t.overshoot >= 0 && t.depth + t.overshoot <= R;
}

constexpr int type_index(CrossingType t, int R) noexcept {
  // Overshoot groups of size R, R-1, ... precede group t.overshoot.
  return t.overshoot * R - t.overshoot * (t.overshoot - 1) / 2 + (t.depth - 1);
}

constexpr CrossingType type_at(int index, int R) noexcept {
  int overshoot = 0;
  int group = R;
  while (index >= group) {
    index -= group;
    ++overshoot;
    --group;
  }
  return CrossingType{overshoot, index + 1};
}

constexpr bool is_base_type(int index, int R) noexcept { return index < R; }

/// Extra child forced at the next level down: a crossing that starts two or
/// more levels below i also crosses back the matching down-step at i-1.
/// Returns -1 when the type has depth 1.
constexpr int forced_child(int index, int R) noexcept {
  const CrossingType t = type_at(index, R);
  if (t.depth < 2) return -1;
  return type_index(CrossingType{t.overshoot + 1, t.depth - 1}, R);
}

/// Steps per down-step of each type in the ladder-time identity: 2 for base
/// types (down-step plus the up-jump that lands exactly on the level), 1 for
/// overshooting types (their up-jump is counted at the level where it lands).
inline std::vector<long long> time_identity_weights(int R) {
  std::vector<long long> w(static_cast<std::size_t>(num_types(R)), 1);
  for (int i = 0; i < R; ++i) w[static_cast<std::size_t>(i)] = 2;
  return w;
}

inline void require_jump_bound(int R) {
  if (R < 1 || R > 8) throw Error(ErrorCode::kInvalidArgument, "jump bound R must be in [1, 8]");
}

}  // namespace rwre
