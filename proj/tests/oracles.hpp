#pragma once

// Independent reference computations used only by the tests. None of these
// share code with the library's recursions: exit and crossing-back
// probabilities come from dense first-step linear systems, type counts from a
// quadratic forward search.

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "rwre/crossing_types.hpp"
#include "rwre/env.hpp"
#include "rwre/walk.hpp"

namespace oracle {

using rwre::Environment;

/// From `start` in [lo, hi]: probabilities of leaving to the right at
/// hi+1, ..., hi+R before dropping below lo. First-step analysis, LU solve.
inline std::vector<double> absorption_exit(const Environment& env, std::int64_t lo, std::int64_t hi,
                                           std::int64_t start) {
  const int R = env.jump_bound();
  const auto m = static_cast<Eigen::Index>(hi - lo + 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, R);
  for (std::int64_t x = lo; x <= hi; ++x) {
    const auto row = static_cast<Eigen::Index>(x - lo);
    const auto& s = env.at(x);
    if (x - 1 >= lo) a(row, row - 1) -= s.q();
    for (int k = 1; k <= R; ++k) {
      const std::int64_t y = x + k;
      if (y <= hi) {
        a(row, static_cast<Eigen::Index>(y - lo)) -= s.p(k);
      } else {
        b(row, static_cast<Eigen::Index>(y - hi - 1)) += s.p(k);
      }
    }
  }
  const Eigen::MatrixXd h = a.partialPivLu().solve(b);
  std::vector<double> out(static_cast<std::size_t>(R));
  for (int j = 0; j < R; ++j) out[static_cast<std::size_t>(j)] = h(static_cast<Eigen::Index>(start - lo), j);
  return out;
}

/// Crossing-back vector at `level` through the Green function of the walk
/// started at level-1 and killed on reaching >= level (or below
/// level - 1 - width):
///   prob(j, k) = q(level) * G(level-1, level-k) * p_{j+k}(level-k).
inline std::vector<double> green_crossing_back(const Environment& env, std::int64_t level, std::int64_t width = 600) {
  const int R = env.jump_bound();
  const std::int64_t lo = level - 1 - width;
  const std::int64_t hi = level - 1;
  const auto m = static_cast<Eigen::Index>(hi - lo + 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
  for (std::int64_t x = lo; x <= hi; ++x) {
    const auto row = static_cast<Eigen::Index>(x - lo);
    const auto& s = env.at(x);
    if (x - 1 >= lo) a(row, row - 1) -= s.q();
    for (int k = 1; k <= R; ++k) {
      if (x + k <= hi) a(row, static_cast<Eigen::Index>(x + k - lo)) -= s.p(k);
    }
  }
  // Row of G for the start state: solve G^T e_start.
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
  e(static_cast<Eigen::Index>(hi - lo)) = 1.0;
  const Eigen::VectorXd g = a.transpose().partialPivLu().solve(e);
  std::vector<double> out(static_cast<std::size_t>(rwre::num_types(R)), 0.0);
  const double q = env.at(level).q();
  for (int t = 0; t < rwre::num_types(R); ++t) {
    const auto ct = rwre::type_at(t, R);
    const std::int64_t origin = level - ct.depth;
    out[static_cast<std::size_t>(t)] =
        q * g(static_cast<Eigen::Index>(origin - lo)) * env.at(origin).p(ct.overshoot + ct.depth);
  }
  return out;
}

struct NaiveRecord {
  std::map<std::int64_t, std::vector<std::int64_t>> counts;
  int immigration_type = -1;
};

/// For each down-step, scan forward for the first position at or above its
/// level. O(T1^2).
inline NaiveRecord naive_classify(const rwre::WalkPath& path, int R) {
  NaiveRecord rec;
  const auto& s = path.sites;
  for (std::size_t t = 0; t + 1 < s.size(); ++t) {
    if (s[t + 1] != s[t] - 1) continue;
    const std::int64_t level = s[t];
    std::size_t u = t + 1;
    while (s[u] < level) ++u;
    const int type = rwre::type_index({static_cast<int>(s[u] - level), static_cast<int>(level - s[u - 1])}, R);
    auto& c = rec.counts[level];
    if (c.empty()) c.assign(static_cast<std::size_t>(rwre::num_types(R)), 0);
    ++c[static_cast<std::size_t>(type)];
  }
  const std::size_t n = s.size();
  rec.immigration_type = rwre::type_index({static_cast<int>(s[n - 1] - 1), static_cast<int>(1 - s[n - 2])}, R);
  return rec;
}

}  // namespace oracle
