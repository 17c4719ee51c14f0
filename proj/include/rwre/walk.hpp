#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/error.hpp"
#include "rwre/rng.hpp"
#include "rwre/stats.hpp"

namespace rwre {

inline constexpr std::int64_t kDefaultMaxSteps = 10'000'000;

/// Trajectory X_0 = 0, ..., X_{T1} up to the first time the walk is above 0.
struct WalkPath {
  std::vector<std::int64_t> sites;

  std::int64_t t1() const noexcept { return static_cast<std::int64_t>(sites.size()) - 1; }
  std::int64_t ending_origin() const { return sites[sites.size() - 2]; }
  std::int64_t ending_position() const { return sites.back(); }
  int ending_jump() const { return static_cast<int>(sites.back() - sites[sites.size() - 2]); }
  std::int64_t min_site() const { return *std::min_element(sites.begin(), sites.end()); }
};

/// Visit counts before T1, keyed by site.
using LocalTimes = std::map<std::int64_t, std::int64_t>;

/// One transition from x.
inline std::int64_t step(const Environment& env, std::int64_t x, Rng& rng) {
  return x + env.at(x).jump_for(uniform01(rng));
}

/// Simulates from 0 until the first n with X_n > 0, reusing `out`'s storage.
/// Throws MaxStepsExceeded once `max_steps` transitions have been made
/// without a ladder time.
inline void simulate_until_ladder(const Environment& env, Rng& rng, std::int64_t max_steps, WalkPath& out) {
  out.sites.clear();
  std::int64_t x = 0;
  out.sites.push_back(x);
  for (std::int64_t n = 0; n < max_steps; ++n) {
    x = step(env, x, rng);
    out.sites.push_back(x);
    if (x > 0) return;
  }
  throw Error(ErrorCode::kMaxStepsExceeded,
              "no ladder time within " + std::to_string(max_steps) + " steps (current site " +
                  std::to_string(x) + ")");
}

inline WalkPath simulate_until_ladder(const Environment& env, Rng& rng,
                                      std::int64_t max_steps = kDefaultMaxSteps) {
  WalkPath path;
  simulate_until_ladder(env, rng, max_steps, path);
  return path;
}

/// Checks the ladder-path shape: starts at 0, stays <= 0 before the last
/// step, ends > 0, increments in {-1, 1..R}.
inline void validate_ladder_path(const WalkPath& path, int R) {
  const auto& s = path.sites;
  if (s.size() < 2 || s.front() != 0) {
    throw Error(ErrorCode::kMalformedPath, "path must start at 0 and take at least one step");
  }
  for (std::size_t k = 1; k < s.size(); ++k) {
    const std::int64_t d = s[k] - s[k - 1];
    if (d != -1 && (d < 1 || d > R)) {
      throw Error(ErrorCode::kMalformedPath,
                  "increment " + std::to_string(d) + " at step " + std::to_string(k) + " not in {-1,1..R}");
    }
    const bool last = k + 1 == s.size();
    if (!last && s[k] > 0) throw Error(ErrorCode::kMalformedPath, "path rises above 0 before its end");
    if (last && s[k] <= 0) throw Error(ErrorCode::kMalformedPath, "path does not end above 0");
  }
}

/// V_i = #{k in [0, T1) : X_k = i}. The terminal position is excluded.
inline LocalTimes local_times(const WalkPath& path) {
  LocalTimes v;
  for (std::size_t k = 0; k + 1 < path.sites.size(); ++k) ++v[path.sites[k]];
  return v;
}

/// Visits to `site` before T1.
inline std::int64_t local_time_at(const WalkPath& path, std::int64_t site) {
  return std::count(path.sites.begin(), path.sites.end() - 1, site);
}

/// Positions X_0..X_n.
inline std::vector<std::int64_t> simulate_fixed_n(const Environment& env, std::int64_t n, Rng& rng) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  std::vector<std::int64_t> traj;
  traj.reserve(static_cast<std::size_t>(n) + 1);
  std::int64_t x = 0;
  traj.push_back(x);
  for (std::int64_t k = 0; k < n; ++k) {
    x = step(env, x, rng);
    traj.push_back(x);
  }
  return traj;
}

/// X_n without storing the trajectory.
inline std::int64_t position_after(const Environment& env, std::int64_t n, Rng& rng) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  std::int64_t x = 0;
  for (std::int64_t k = 0; k < n; ++k) x = step(env, x, rng);
  return x;
}

inline constexpr std::int64_t kPathChunk = 4096;

/// `n` independent ladder paths; path k comes from stream k / kPathChunk of
/// `seed`, so the batch does not depend on the number of worker threads.
/// Paths that hit `max_steps` are left empty.
inline std::vector<std::optional<WalkPath>> simulate_ladder_batch(const Environment& env, std::int64_t n,
                                                                 std::uint64_t seed,
                                                                 std::int64_t max_steps = kDefaultMaxSteps) {
  if (n < 0) throw Error(ErrorCode::kInvalidArgument, "path count must be >= 0");
  std::vector<std::optional<WalkPath>> out(static_cast<std::size_t>(n));
  const std::int64_t chunks = (n + kPathChunk - 1) / kPathChunk;
  parallel_for(chunks, [&](std::int64_t c) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(c));
    const std::int64_t end = std::min(n, (c + 1) * kPathChunk);
    for (std::int64_t k = c * kPathChunk; k < end; ++k) {
      WalkPath path;
      try {
        simulate_until_ladder(env, rng, max_steps, path);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kMaxStepsExceeded) throw;
        continue;
      }
      out[static_cast<std::size_t>(k)] = std::move(path);
    }
  });
  return out;
}

/// The jump that first brings the walk back to `level` or above after a
/// forced down-step from `level`.
struct CrossingBack {
  std::int64_t origin = 0;
  std::int64_t landing = 0;
};

inline CrossingBack sample_crossing_back(const Environment& env, std::int64_t level, Rng& rng,
                                         std::int64_t max_steps = kDefaultMaxSteps) {
  std::int64_t x = level - 1;
  for (std::int64_t n = 0; n < max_steps; ++n) {
    const std::int64_t y = step(env, x, rng);
    if (y >= level) return CrossingBack{x, y};
    x = y;
  }
  throw Error(ErrorCode::kMaxStepsExceeded, "no crossing back within " + std::to_string(max_steps) + " steps");
}

}  // namespace rwre
