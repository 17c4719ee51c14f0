#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rwre/crossing_types.hpp"
#include "rwre/env.hpp"
#include "rwre/error.hpp"
#include "rwre/linalg.hpp"

namespace rwre {

inline constexpr double kDefaultTol = 1e-10;
inline constexpr std::int64_t kDefaultMaxDepth = 10'000;

/// R x R transfer matrix of one site: first row (tail(1)/q, ..., tail(R)/q),
/// ones on the subdiagonal. It advances the increments g(k) = f(k) - f(k-1)
/// of a harmonic function one site to the left.
struct CompanionMatrix {
  Matrix entries;
};

inline CompanionMatrix companion_matrix(const SiteLaw& site) {
  if (!(site.q() > 0.0)) throw Error(ErrorCode::kInvalidArgument, "companion matrix needs q > 0");
  const auto R = static_cast<std::size_t>(site.jump_bound());
  Matrix m(R, R);
  for (std::size_t j = 0; j < R; ++j) m(0, j) = site.tail(static_cast<int>(j) + 1) / site.q();
  for (std::size_t r = 1; r < R; ++r) m(r, r - 1) = 1.0;
  return CompanionMatrix{std::move(m)};
}

/// Right-exit distribution from a level: probs[j] is the probability of
/// first landing above the level at level + j + 1.
struct ExitDistribution {
  std::vector<double> probs;
  std::int64_t truncation_n = 0;
  bool converged = false;

  double sum() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }
};

/// Accumulates S = M(i) + M(i-1)M(i) + ... + M(i-n)...M(i) one site at a
/// time, with a running scale factor: S = exp(log_scale) * scaled_sum.
/// The exit ratio only depends on S up to the "1 +" in its denominator,
/// which becomes exp(-log_scale).
class ExitAccumulator {
 public:
  ExitAccumulator(const Environment& env, std::int64_t level)
      : env_(env), level_(level), R_(static_cast<std::size_t>(env.jump_bound())) {
    product_ = companion_matrix(env_.at(level_)).entries;
    sum_ = product_;
    renormalize();
  }

  /// Live sites are [level - depth, level].
  std::int64_t depth() const noexcept { return depth_; }

  void extend() {
    ++depth_;
    const Matrix m = companion_matrix(env_.at(level_ - depth_)).entries;
    Matrix::multiply_into(m, product_, scratch_);
    std::swap(product_, scratch_);
    sum_ += product_;
    renormalize();
  }

  ExitDistribution current() const {
    ExitDistribution d;
    d.truncation_n = depth_;
    d.probs.resize(R_);
    const double denom = std::exp(-log_scale_) + sum_(0, 0);
    for (std::size_t j = 0; j < R_; ++j) {
      const double next = j + 1 < R_ ? sum_(0, j + 1) : 0.0;
      d.probs[j] = (sum_(0, j) - next) / denom;
    }
    for (double p : d.probs) {
      if (!std::isfinite(p)) {
        throw Error(ErrorCode::kNumericalOverflow,
                    "non-finite exit probability at level " + std::to_string(level_));
      }
    }
    return d;
  }

 private:
  void renormalize() {
    const double m = sum_.max_abs();
    if (!std::isfinite(m)) throw Error(ErrorCode::kNumericalOverflow, "transfer-matrix product overflowed");
    if (m > 1e100 || (m > 0.0 && m < 1e-100)) {
      const double inv = 1.0 / m;
      sum_ *= inv;
      product_ *= inv;
      log_scale_ += std::log(m);
    }
  }

  Environment env_;
  std::int64_t level_;
  std::size_t R_;
  std::int64_t depth_ = 0;
  double log_scale_ = 0.0;
  Matrix product_;
  Matrix sum_;
  Matrix scratch_;
};

/// Probabilities of leaving [i - n, i] to the right at i+1, ..., i+R before
/// falling below i - n.
inline ExitDistribution exit_probs_finite(const Environment& env, std::int64_t i, std::int64_t n) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "exit depth n must be >= 2");
  ExitAccumulator acc(env, i);
  while (acc.depth() < n) acc.extend();
  return acc.current();
}

/// n -> infinity limit of exit_probs_finite. Stops when successive
/// distributions differ by less than tol (max norm) and the total is within
/// tol of 1; the second test fails when the walk is not transient to the right.
inline ExitDistribution exit_probs_limit(const Environment& env, std::int64_t i, double tol = kDefaultTol,
                                         std::int64_t max_n = kDefaultMaxDepth) {
  if (!(tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tol must be positive");
  ExitAccumulator acc(env, i);
  acc.extend();
  std::optional<ExitDistribution> prev;
  while (acc.depth() < max_n) {
    acc.extend();
    ExitDistribution cur = acc.current();
    if (prev) {
      double diff = 0.0;
      for (std::size_t j = 0; j < cur.probs.size(); ++j) {
        diff = std::max(diff, std::abs(cur.probs[j] - prev->probs[j]));
      }
      if (diff < tol && std::abs(cur.sum() - 1.0) < tol) {
        cur.converged = true;
        return cur;
      }
    }
    prev = std::move(cur);
  }
  throw Error(ErrorCode::kNotConverged, "exit probabilities at level " + std::to_string(i) +
                                            " not converged by depth " + std::to_string(max_n) +
                                            " (sum " + std::to_string(prev ? prev->sum() : 0.0) + ")");
}

/// Crossing-back probabilities at one level, indexed by crossing type:
/// probs[t] = P^level(first step is down and the crossing back has type t).
/// For R = 2, probs = (alpha, beta, gamma).
struct CrossingBackProbs {
  int R = 2;
  std::int64_t level = 0;
  double q = 0.0;
  std::vector<double> probs;

  double alpha() const { return probs.at(0); }
  double beta() const { return probs.at(1); }
  double gamma() const { return probs.at(2); }

  double base_sum() const {
    double s = 0.0;
    for (int k = 0; k < R; ++k) s += probs[static_cast<std::size_t>(k)];
    return s;
  }

  double total() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }
};

/// Offspring mean matrix: row = parent type, column = child type.
struct MeanMatrix {
  int R = 2;
  Matrix entries;
};

/// Memoizing evaluator of the exit/crossing-back recursions on one
/// environment. Periodic environments share results between levels that
/// differ by a multiple of the period.
class ExitSolver {
 public:
  explicit ExitSolver(Environment env, double tol = kDefaultTol, std::int64_t max_n = kDefaultMaxDepth)
      : env_(std::move(env)), tol_(tol), max_n_(max_n), R_(env_.jump_bound()) {}

  const Environment& environment() const noexcept { return env_; }
  int jump_bound() const noexcept { return R_; }
  double tol() const noexcept { return tol_; }

  const ExitDistribution& exit_limit(std::int64_t level) {
    const std::int64_t key = canonical(level);
    auto it = exits_.find(key);
    if (it == exits_.end()) it = exits_.emplace(key, exit_probs_limit(env_, level, tol_, max_n_)).first;
    return it->second;
  }

  /// alpha/beta/gamma by the R = 2 formulas:
  ///   gamma(i) = q(i) P^{i-1}[exit at i+1]
  ///   alpha(i) + beta(i) = q(i) P^{i-1}[exit at i], split p1(i-1) : gamma(i-1).
  CrossingBackProbs crossing_back_r2(std::int64_t level) {
    if (R_ != 2) throw Error(ErrorCode::kInvalidArgument, "R = 2 formulas need jump bound 2");
    const SiteLaw& here = env_.at(level);
    const SiteLaw& below = env_.at(level - 1);
    const ExitDistribution e1 = exit_limit(level - 1);
    const ExitDistribution& e2 = exit_limit(level - 2);
    const double gamma_below = below.q() * e2.probs[1];
    const double gamma = here.q() * e1.probs[1];
    const double back_to_level = here.q() * e1.probs[0];
    const double split = below.p(1) + gamma_below;
    const double alpha = split > 0.0 ? back_to_level * below.p(1) / split : back_to_level;
    const double beta = split > 0.0 ? back_to_level * gamma_below / split : 0.0;
    return CrossingBackProbs{2, level, here.q(), {alpha, beta, gamma}};
  }

  /// General-R crossing-back vector. The landing-above-level total for
  /// overshoot j is q(i) P^{i-1}[exit at i+j]; it is split across depths
  /// 1..R-j in the ratio
  ///   p_{j+1}(i-1) : prob(i-1; overshoot j+1, depth 1) : ... : prob(i-1; overshoot j+1, depth R-j-1).
  /// The recursion only ever asks level i-1 for larger overshoots, so it
  /// bottoms out after R-1 levels at the top type, which has no split.
  CrossingBackProbs crossing_back(std::int64_t level) {
    CrossingBackProbs cb;
    cb.R = R_;
    cb.level = level;
    cb.q = env_.at(level).q();
    cb.probs = partial_crossing_back(level, 0);
    return cb;
  }

  MeanMatrix mean_matrix(std::int64_t level);

  /// E[U(1)] for the walk started at `level`: the law of the immigrant type.
  RowVector immigration_law(std::int64_t level) {
    const CrossingBackProbs cb = crossing_back(level);
    const SiteLaw& site = env_.at(level);
    const double denom = 1.0 - cb.base_sum();
    if (!(denom > 0.0)) throw Error(ErrorCode::kDegenerateDenominator, "1 - base crossing-back sum <= 0");
    RowVector law(static_cast<std::size_t>(num_types(R_)), 0.0);
    for (int t = 0; t < num_types(R_); ++t) {
      const CrossingType ct = type_at(t, R_);
      const double w = ct.depth == 1
                           ? site.p(ct.overshoot + 1)
                           : cb.probs[static_cast<std::size_t>(
                                 type_index(CrossingType{ct.overshoot + 1, ct.depth - 1}, R_))];
      law[static_cast<std::size_t>(t)] = w / denom;
    }
    return law;
  }

 private:
  std::int64_t canonical(std::int64_t level) const {
    if (auto p = env_.period()) return ((level % *p) + *p) % *p;
    return level;
  }

  // Entries for overshoot >= min_overshoot; others left at 0.
  std::vector<double> partial_crossing_back(std::int64_t level, int min_overshoot) {
    const auto key = std::make_pair(canonical(level), min_overshoot);
    if (auto it = partial_.find(key); it != partial_.end()) return it->second;
    std::vector<double> out(static_cast<std::size_t>(num_types(R_)), 0.0);
    const SiteLaw& here = env_.at(level);
    const SiteLaw& below = env_.at(level - 1);
    const ExitDistribution exits = exit_limit(level - 1);
    std::vector<double> deeper;
    if (min_overshoot + 1 <= R_ - 1) deeper = partial_crossing_back(level - 1, min_overshoot + 1);
    for (int j = min_overshoot; j < R_; ++j) {
      const double total = here.q() * exits.probs[static_cast<std::size_t>(j)];
      const int n_depths = R_ - j;
      std::vector<double> weights(static_cast<std::size_t>(n_depths));
      weights[0] = below.p(j + 1);
      for (int k = 2; k <= n_depths; ++k) {
        weights[static_cast<std::size_t>(k - 1)] =
            deeper[static_cast<std::size_t>(type_index(CrossingType{j + 1, k - 1}, R_))];
      }
      double wsum = 0.0;
      for (double w : weights) wsum += w;
      for (int k = 1; k <= n_depths; ++k) {
        const double share = wsum > 0.0 ? weights[static_cast<std::size_t>(k - 1)] / wsum : (k == 1 ? 1.0 : 0.0);
        out[static_cast<std::size_t>(type_index(CrossingType{j, k}, R_))] = total * share;
      }
    }
    partial_.emplace(key, out);
    return out;
  }

  Environment env_;
  double tol_;
  std::int64_t max_n_;
  int R_;
  std::map<std::int64_t, ExitDistribution> exits_;
  std::map<std::pair<std::int64_t, int>, std::vector<double>> partial_;
};

inline CrossingBackProbs crossing_back_probs_r2(const Environment& env, std::int64_t i, double tol = kDefaultTol,
                                                std::int64_t max_n = kDefaultMaxDepth) {
  ExitSolver solver(env, tol, max_n);
  return solver.crossing_back_r2(i);
}

/// `depth` bounds the truncation depth of every exit-probability limit
/// the recursion needs.
inline CrossingBackProbs crossing_back_probs_general(const Environment& env, std::int64_t i, int R,
                                                     std::int64_t depth = kDefaultMaxDepth,
                                                     double tol = kDefaultTol) {
  require_jump_bound(R);
  if (depth < 1) throw Error(ErrorCode::kInvalidArgument, "depth must be >= 1");
  if (env.jump_bound() != R) throw Error(ErrorCode::kInvalidArgument, "environment jump bound differs from R");
  ExitSolver solver(env, tol, depth);
  return solver.crossing_back(i);
}

/// Offspring mean matrix. Every row carries the base-type means
/// prob(k) / (1 - base sum); a parent of depth >= 2 additionally forces one
/// child of type (overshoot + 1, depth - 1).
inline MeanMatrix mean_matrix(const CrossingBackProbs& cb, int R) {
  require_jump_bound(R);
  if (cb.R != R || cb.probs.size() != static_cast<std::size_t>(num_types(R))) {
    throw Error(ErrorCode::kInvalidArgument, "crossing-back vector does not match R");
  }
  const double denom = 1.0 - cb.base_sum();
  if (!(denom > 0.0)) throw Error(ErrorCode::kDegenerateDenominator, "1 - base crossing-back sum <= 0");
  const auto n = static_cast<std::size_t>(num_types(R));
  Matrix m(n, n);
  for (std::size_t row = 0; row < n; ++row) {
    for (int k = 0; k < R; ++k) m(row, static_cast<std::size_t>(k)) = cb.probs[static_cast<std::size_t>(k)] / denom;
    const int child = forced_child(static_cast<int>(row), R);
    if (child >= 0) m(row, static_cast<std::size_t>(child)) += 1.0;
  }
  return MeanMatrix{R, std::move(m)};
}

inline MeanMatrix ExitSolver::mean_matrix(std::int64_t level) { return rwre::mean_matrix(crossing_back(level), R_); }

/// P(U(i) = outcome | U(i+1) = e_parent): a multinomial-geometric count of
/// base types with weight (1 - base sum), plus the forced child.
inline double offspring_pmf(const CrossingBackProbs& cb, int parent, const std::vector<std::int64_t>& outcome) {
  const int R = cb.R;
  const int n = num_types(R);
  const int child = forced_child(parent, R);
  for (int t = R; t < n; ++t) {
    const std::int64_t expected = t == child ? 1 : 0;
    if (outcome[static_cast<std::size_t>(t)] != expected) return 0.0;
  }
  double log_p = std::log1p(-cb.base_sum());
  std::int64_t total = 0;
  for (int k = 0; k < R; ++k) {
    const std::int64_t u = outcome[static_cast<std::size_t>(k)];
    if (u < 0) return 0.0;
    if (u == 0) continue;
    const double pk = cb.probs[static_cast<std::size_t>(k)];
    if (pk <= 0.0) return 0.0;
    log_p += static_cast<double>(u) * std::log(pk) - std::lgamma(static_cast<double>(u) + 1.0);
    total += u;
  }
  log_p += std::lgamma(static_cast<double>(total) + 1.0);
  return std::exp(log_p);
}

}  // namespace rwre
