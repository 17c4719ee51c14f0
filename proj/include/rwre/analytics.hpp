#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rwre/crossing_types.hpp"
#include "rwre/env.hpp"
#include "rwre/error.hpp"
#include "rwre/exitprob.hpp"
#include "rwre/linalg.hpp"
#include "rwre/rng.hpp"
#include "rwre/stats.hpp"
#include "rwre/walk.hpp"

namespace rwre {

inline constexpr double kDefaultSeriesTol = 1e-12;
inline constexpr std::int64_t kDefaultSeriesDepth = 10'000;
inline constexpr std::int64_t kMinSeriesTerms = 5;

/// Closed forms for a constant (1,2) environment with positive drift.
struct HomogeneousSolution {
  double delta = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double exit1 = 0.0;  // P(X_{T1} = 1)
  double exit2 = 0.0;  // P(X_{T1} = 2)
  double e_x_t1 = 0.0;
  double e_t1 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

inline HomogeneousSolution homogeneous_closed_forms(const SiteLaw& site) {
  if (site.jump_bound() > 2) throw Error(ErrorCode::kInvalidArgument, "closed forms need R <= 2");
  const double q = site.q();
  const double p1 = site.p(1);
  const double p2 = site.p(2);
  if (!(q > 0.0) || !(site.mean_increment() > 0.0)) {
    throw Error(ErrorCode::kNotDriftPositive, "closed forms need q > 0 and E(X1) = p1 + 2p2 - q > 0");
  }
  HomogeneousSolution s;
  s.delta = std::sqrt((p1 + p2) * (p1 + p2) + 4.0 * q * p2);
  s.lambda1 = (p1 + p2 + s.delta) / (2.0 * q);
  s.lambda2 = (p1 + p2 - s.delta) / (2.0 * q);
  s.exit1 = 1.0 + s.lambda2;
  s.exit2 = -s.lambda2;
  s.e_x_t1 = 1.0 - s.lambda2;
  s.e_t1 = 2.0 * s.delta / (1.0 - q - q * p1 + 3.0 * q * p2 + (1.0 - 3.0 * q) * s.delta);
  s.gamma = -q * s.lambda2;
  s.alpha = q * (1.0 + s.lambda2) * p1 / (p1 - q * s.lambda2);
  s.beta = q * (1.0 + s.lambda2) * (-q * s.lambda2) / (p1 - q * s.lambda2);
  return s;
}

/// Value of a truncated series and the number of terms used.
struct SeriesValue {
  double value = 0.0;
  std::int64_t depth = 0;
};

namespace detail {

inline void check_series_args(std::int64_t depth, double tol) {
  if (depth < 1) throw Error(ErrorCode::kInvalidArgument, "series depth must be >= 1");
  if (!(tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "series tol must be positive");
}

inline bool series_done(double term_norm, std::int64_t terms, double tol) {
  return terms >= kMinSeriesTerms && term_norm < tol;
}

[[noreturn]] inline void series_diverged(const char* what, std::int64_t depth) {
  throw Error(ErrorCode::kSeriesDiverged,
              std::string(what) + ": terms still above tol after " + std::to_string(depth) + " terms");
}

// (p1(m)/(p1(m)+gamma(m)), gamma(m)/(p1(m)+gamma(m)), 1): the sum over
// ending points of the conditional immigrant mean for the walk started at m.
inline RowVector conditional_immigrant_sum(ExitSolver& solver, std::int64_t m) {
  const double p1 = solver.environment().at(m).p(1);
  const double gamma = solver.crossing_back(m).gamma();
  const double s = p1 + gamma;
  if (!(s > 0.0)) throw Error(ErrorCode::kDegenerateDenominator, "p1 + gamma = 0");
  return RowVector{p1 / s, gamma / s, 1.0};
}

}  // namespace detail

/// E_w(T1) = 1 + <w, E[U(1)] * sum_{i<=0} N(0)...N(i)> with w = 2 on base
/// types and 1 elsewhere ((2,2,1) for R = 2).
inline SeriesValue expected_t1_series(ExitSolver& solver, std::int64_t depth = kDefaultSeriesDepth,
                                      double tol = kDefaultSeriesTol) {
  detail::check_series_args(depth, tol);
  const int R = solver.jump_bound();
  const auto w = time_identity_weights(R);
  RowVector weights(w.begin(), w.end());
  RowVector term = solver.immigration_law(0);
  double total = 0.0;
  for (std::int64_t n = 0; n < depth; ++n) {
    term = times(term, solver.mean_matrix(-n).entries);
    total += dot(weights, term);
    if (detail::series_done(max_abs(term), n + 1, tol)) return SeriesValue{1.0 + total, n + 1};
  }
  detail::series_diverged("expected T1", depth);
}

inline double expected_t1(const Environment& env, std::int64_t depth = kDefaultSeriesDepth,
                          double tol = kDefaultSeriesTol) {
  ExitSolver solver(env, std::min(tol, kDefaultTol));
  return expected_t1_series(solver, depth, tol).value;
}

struct WaldReport {
  double e_x1 = 0.0;
  double e_x_t1 = 0.0;
  double e_t1_closed = 0.0;
  double e_t1_series = 0.0;
  double closed_form_residual = 0.0;  // |E(X_T1) - E(T1) E(X1)|, closed forms
  double series_residual = 0.0;       // same with E(T1) from the branching series
};

/// Wald's identity for a constant environment, checked twice: with the
/// closed-form E(T1) and with E(T1) from the branching-process series.
inline WaldReport wald_check(const SiteLaw& site, std::int64_t depth = kDefaultSeriesDepth,
                             double tol = 1e-14) {
  const HomogeneousSolution hs = homogeneous_closed_forms(site);
  WaldReport r;
  r.e_x1 = site.mean_increment();
  r.e_x_t1 = hs.e_x_t1;
  r.e_t1_closed = hs.e_t1;
  ExitSolver solver(Environment::constant(site), 1e-14);
  r.e_t1_series = expected_t1_series(solver, depth, tol).value;
  r.closed_form_residual = std::abs(r.e_x_t1 - r.e_t1_closed * r.e_x1);
  r.series_residual = std::abs(r.e_x_t1 - r.e_t1_series * r.e_x1);
  return r;
}

struct GeometricSeries {
  Matrix closed_form;   // sum_{n>=1} N^n
  Matrix partial_sums;  // N + ... + N^terms
  std::int64_t terms = 0;
  double spectral_radius = 0.0;
};

/// sum_{n>=1} N^n for a constant-environment R = 2 mean matrix, in closed
/// form 1/(1-2a-3b) [[a, b, b], [2a, 2b, 1-2a-b], [a, b, b]] (a = alpha,
/// b = beta recovered from the first row of N), alongside direct partial sums.
inline GeometricSeries geometric_series_mean_matrix(const MeanMatrix& n_mat, std::int64_t partial_terms = 200) {
  if (n_mat.R != 2 || n_mat.entries.rows() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "closed form is for 3x3 (R = 2) mean matrices");
  }
  const Matrix& N = n_mat.entries;
  GeometricSeries g;
  g.spectral_radius = spectral_radius_nonnegative(N);
  if (!(g.spectral_radius < 1.0)) {
    throw Error(ErrorCode::kSpectralRadiusAtLeastOne,
                "spectral radius " + std::to_string(g.spectral_radius) + " >= 1");
  }
  const double a_ratio = N(0, 0);
  const double b_ratio = N(0, 1);
  const double alpha = a_ratio / (1.0 + a_ratio + b_ratio);
  const double beta = b_ratio / (1.0 + a_ratio + b_ratio);
  const double c = 1.0 / (1.0 - 2.0 * alpha - 3.0 * beta);
  g.closed_form = Matrix{{alpha, beta, beta}, {2.0 * alpha, 2.0 * beta, 1.0 - 2.0 * alpha - beta}, {alpha, beta, beta}};
  g.closed_form *= c;

  g.terms = partial_terms;
  g.partial_sums = Matrix(3, 3);
  Matrix power = Matrix::identity(3);
  Matrix next(3, 3);
  for (std::int64_t n = 0; n < partial_terms; ++n) {
    Matrix::multiply_into(power, N, next);
    std::swap(power, next);
    g.partial_sums += power;
  }
  return g;
}

/// dQ/dP at the environment's origin:
///   [2 + <(1,1,1), sum_{m>=1} r(m) N(m)...N(1)>] / (1 - alpha(0) - beta(0)),
/// r(m) = (p1(m)/(p1(m)+gamma(m)), gamma(m)/(p1(m)+gamma(m)), 1).
/// N(m) for m >= 1 uses the same site-local formulas as for m <= 0.
inline SeriesValue invariant_density_series(ExitSolver& solver, std::int64_t depth = kDefaultSeriesDepth,
                                            double tol = kDefaultSeriesTol) {
  detail::check_series_args(depth, tol);
  if (solver.jump_bound() != 2) throw Error(ErrorCode::kInvalidArgument, "density formula needs R = 2");
  const double denom = 1.0 - solver.crossing_back(0).base_sum();
  if (!(denom > 0.0)) throw Error(ErrorCode::kDegenerateDenominator, "1 - alpha(0) - beta(0) <= 0");
  Matrix product = Matrix::identity(3);
  Matrix next(3, 3);
  double total = 0.0;
  for (std::int64_t m = 1; m <= depth; ++m) {
    Matrix::multiply_into(solver.mean_matrix(m).entries, product, next);
    std::swap(product, next);
    const RowVector term = times(detail::conditional_immigrant_sum(solver, m), product);
    total += term[0] + term[1] + term[2];
    if (detail::series_done(max_abs(term), m, tol)) return SeriesValue{(2.0 + total) / denom, m};
  }
  detail::series_diverged("invariant density", depth);
}

inline double invariant_density(const Environment& env, std::int64_t depth = kDefaultSeriesDepth,
                                double tol = kDefaultSeriesTol) {
  ExitSolver solver(env, std::min(tol, kDefaultTol));
  return invariant_density_series(solver, depth, tol).value;
}

/// 2 + <(2,2,1), sum_{m>=0} r(m) N(m)...N(0)>: per-environment integrand of
/// the drift denominator (its P-expectation is Q(Omega)).
inline SeriesValue drift_denominator_series(ExitSolver& solver, std::int64_t depth = kDefaultSeriesDepth,
                                            double tol = kDefaultSeriesTol) {
  detail::check_series_args(depth, tol);
  if (solver.jump_bound() != 2) throw Error(ErrorCode::kInvalidArgument, "drift formula needs R = 2");
  const RowVector weights{2.0, 2.0, 1.0};
  Matrix product = Matrix::identity(3);
  Matrix next(3, 3);
  double total = 0.0;
  for (std::int64_t m = 0; m < depth; ++m) {
    Matrix::multiply_into(solver.mean_matrix(m).entries, product, next);
    std::swap(product, next);
    const RowVector term = times(detail::conditional_immigrant_sum(solver, m), product);
    total += dot(weights, term);
    if (detail::series_done(max_abs(term), m + 1, tol)) return SeriesValue{2.0 + total, m + 1};
  }
  detail::series_diverged("drift denominator", depth);
}

struct DensityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::vector<double> contributions;  // one per shift 0, 1, ..., shift_depth
  std::int64_t paths = 0;
};

/// Monte Carlo estimate of dQ/dP at the origin:
///   sum_{s=0}^{shift_depth} [E(V_{-s} | X_T1 = 1) + E(V_{-s} | X_T1 = 2)]
/// with both conditional means taken for the walk in the environment
/// shifted by s, where site -s carries the original site 0.
inline DensityEstimate estimate_density_mc(const Environment& env, std::int64_t paths_per_shift,
                                           std::int64_t shift_depth, std::uint64_t seed,
                                           std::int64_t max_steps = kDefaultMaxSteps,
                                           std::int64_t min_conditioning = 30) {
  if (shift_depth < 1) throw Error(ErrorCode::kInvalidArgument, "shift_depth must be >= 1");
  if (paths_per_shift < 1) throw Error(ErrorCode::kInvalidArgument, "paths_per_shift must be >= 1");
  if (env.jump_bound() != 2) throw Error(ErrorCode::kInvalidArgument, "density estimator needs R = 2");
  constexpr std::int64_t kChunk = 1 << 15;
  const std::int64_t chunks_per_shift = (paths_per_shift + kChunk - 1) / kChunk;
  const std::int64_t n_shifts = shift_depth + 1;
  // [shift][chunk] -> stats for ending at 1 and at 2
  std::vector<std::array<RunningStats, 2>> parts(static_cast<std::size_t>(n_shifts * chunks_per_shift));
  parallel_for(n_shifts * chunks_per_shift, [&](std::int64_t task) {
    const std::int64_t s = task / chunks_per_shift;
    const std::int64_t c = task % chunks_per_shift;
    const Environment shifted = env.shifted(s);
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(task));
    WalkPath path;
    auto& out = parts[static_cast<std::size_t>(task)];
    const std::int64_t begin = c * kChunk;
    const std::int64_t end = std::min(paths_per_shift, begin + kChunk);
    for (std::int64_t k = begin; k < end; ++k) {
      simulate_until_ladder(shifted, rng, max_steps, path);
      const auto v = static_cast<double>(local_time_at(path, -s));
      out[static_cast<std::size_t>(path.ending_position() - 1)].add(v);
    }
  });
  DensityEstimate est;
  est.paths = paths_per_shift * n_shifts;
  double var = 0.0;
  for (std::int64_t s = 0; s < n_shifts; ++s) {
    std::array<RunningStats, 2> merged;
    for (std::int64_t c = 0; c < chunks_per_shift; ++c) {
      for (int e = 0; e < 2; ++e) merged[e].merge(parts[static_cast<std::size_t>(s * chunks_per_shift + c)][e]);
    }
    for (int e = 0; e < 2; ++e) {
      if (merged[e].count < min_conditioning) {
        throw Error(ErrorCode::kConditioningStarved,
                    "shift " + std::to_string(s) + ": only " + std::to_string(merged[e].count) +
                        " paths end at " + std::to_string(e + 1));
      }
    }
    const double contribution = merged[0].mean() + merged[1].mean();
    est.contributions.push_back(contribution);
    est.value += contribution;
    var += merged[0].variance() / static_cast<double>(merged[0].count) +
           merged[1].variance() / static_cast<double>(merged[1].count);
  }
  est.std_error = std::sqrt(var);
  return est;
}

/// One step of the environment seen from the particle: theta^{X_1} env.
inline Environment kernel_step(const Environment& env, Rng& rng) {
  return env.shifted(env.at(0).jump_for(uniform01(rng)));
}

struct DriftReport {
  double v_p = 0.0;
  double numerator = 0.0;    // E_P[d(0) Pi]
  double denominator = 0.0;  // E_P[2 + <(2,2,1), ...>]
  double std_error = 0.0;    // 0 for exact estimators
  std::int64_t depth = 0;    // largest series length used
  std::string estimator;     // "exact" or "monte-carlo"
  std::int64_t samples = 0;
};

/// Per-environment integrands of the drift formula.
struct DriftTerms {
  double numerator = 0.0;
  double denominator = 0.0;
  std::int64_t depth = 0;
};

inline DriftTerms drift_terms(const Environment& env, std::int64_t depth, double tol) {
  ExitSolver solver(env, std::min(tol, kDefaultTol));
  const SeriesValue pi = invariant_density_series(solver, depth, tol);
  const SeriesValue den = drift_denominator_series(solver, depth, tol);
  // Local drift at 0; the jump -1 has probability q(0).
  const double local = env.at(0).mean_increment();
  return DriftTerms{local * pi.value, den.value, std::max(pi.depth, den.depth)};
}

/// Law-of-large-numbers velocity v_P = E_P[d(0) Pi] / E_P[denominator].
/// Constant laws are exact, periodic laws average exactly over the period,
/// i.i.d. laws average over `env_samples` independent environments.
inline DriftReport drift(const EnvironmentLaw& law, std::int64_t depth = kDefaultSeriesDepth,
                         double tol = kDefaultSeriesTol, std::int64_t env_samples = 10'000,
                         std::uint64_t seed = 0) {
  if (depth < 1) throw Error(ErrorCode::kInvalidArgument, "depth must be >= 1");
  if (law.jump_bound() != 2) throw Error(ErrorCode::kInvalidArgument, "drift formula needs R = 2");
  DriftReport report;
  auto finish = [&](double num, double den) {
    if (!(den > 0.0)) throw Error(ErrorCode::kDenominatorNonpositive, "drift denominator <= 0");
    report.numerator = num;
    report.denominator = den;
    report.v_p = num / den;
  };
  switch (law.kind()) {
    case EnvironmentLaw::Kind::kHomogeneous: {
      const DriftTerms t = drift_terms(Environment::constant(law.atoms().front()), depth, tol);
      report.estimator = "exact";
      report.samples = 1;
      report.depth = t.depth;
      finish(t.numerator, t.denominator);
      return report;
    }
    case EnvironmentLaw::Kind::kPeriodic: {
      const Environment env = Environment::cyclic(law.atoms());
      const auto period = static_cast<std::int64_t>(law.atoms().size());
      double num = 0.0;
      double den = 0.0;
      for (std::int64_t s = 0; s < period; ++s) {
        const DriftTerms t = drift_terms(env.shifted(s), depth, tol);
        num += t.numerator;
        den += t.denominator;
        report.depth = std::max(report.depth, t.depth);
      }
      report.estimator = "exact";
      report.samples = period;
      finish(num / static_cast<double>(period), den / static_cast<double>(period));
      return report;
    }
    case EnvironmentLaw::Kind::kIidFiniteSupport:
      break;
  }
  if (env_samples < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 environment samples");
  std::vector<DriftTerms> terms(static_cast<std::size_t>(env_samples));
  parallel_for(env_samples, [&](std::int64_t s) {
    const Environment env = sample_environment(law, Window{-depth, depth}, hash_pair(seed, static_cast<std::uint64_t>(s)));
    terms[static_cast<std::size_t>(s)] = drift_terms(env, depth, tol);
  });
  RunningStats num;
  RunningStats den;
  for (const auto& t : terms) {
    num.add(t.numerator);
    den.add(t.denominator);
    report.depth = std::max(report.depth, t.depth);
  }
  report.estimator = "monte-carlo";
  report.samples = env_samples;
  finish(num.mean(), den.mean());
  // Delta method for a ratio of means.
  RunningStats resid;
  for (const auto& t : terms) resid.add(t.numerator - report.v_p * t.denominator);
  report.std_error = resid.std_error() / report.denominator;
  return report;
}

}  // namespace rwre
