#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rwre/analytics.hpp"
#include "rwre/config.hpp"
#include "rwre/decompose.hpp"
#include "rwre/env.hpp"
#include "rwre/exitprob.hpp"
#include "rwre/rng.hpp"
#include "rwre/stats.hpp"
#include "rwre/walk.hpp"

namespace rwre {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ValidationOptions {
  /// Replaces the time-identity weights (negative control).
  std::optional<std::vector<long long>> time_weights;
  std::int64_t density_shift_depth = 30;
  std::int64_t lln_replicas = 20;
  std::int64_t crossing_levels = 20;
};

namespace detail {

// Stream tags, one per stochastic check.
enum StreamTag : std::uint64_t { kEnvStream = 1, kPathStream, kDensityStream, kDriftStream, kLlnStream };

inline CheckResult run_check(const std::string& name, double threshold,
                             const std::function<CheckResult()>& body) {
  try {
    CheckResult r = body();
    r.name = name;
    r.threshold = threshold;
    return r;
  } catch (const Error& e) {
    return CheckResult{name, false, std::nan(""), threshold, std::string(to_string(e.code())) + ": " + e.what()};
  }
}

inline std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace detail

/// The full check battery on the configured law. Every check is reported,
/// including ones that raise; `pass` is false for those.
inline std::vector<CheckResult> run_validation(const ExperimentConfig& cfg, const ValidationOptions& opt = {}) {
  const int R = cfg.R;
  const Environment env =
      sample_environment(cfg.law, Window{-cfg.depth, cfg.depth}, hash_pair(cfg.seed, detail::kEnvStream));
  const bool constant = cfg.law.kind() == EnvironmentLaw::Kind::kHomogeneous;
  std::vector<CheckResult> results;

  std::vector<WalkPath> paths;
  std::int64_t stuck = 0;
  for (auto& p : simulate_ladder_batch(env, cfg.paths, hash_pair(cfg.seed, detail::kPathStream), cfg.max_steps)) {
    if (p) {
      paths.push_back(std::move(*p));
    } else {
      ++stuck;
    }
  }

  results.push_back(detail::run_check("time_identity", 0.0, [&] {
    const auto weights = opt.time_weights ? *opt.time_weights : time_identity_weights(R);
    std::int64_t failures = 0;
    std::int64_t first = -1;
    for (std::size_t k = 0; k < paths.size(); ++k) {
      if (!verify_time_identity(paths[k], decompose_general(paths[k], R), weights)) {
        if (first < 0) first = static_cast<std::int64_t>(k);
        ++failures;
      }
    }
    std::string detail = std::to_string(paths.size()) + " paths";
    if (stuck > 0) detail += ", " + std::to_string(stuck) + " hit max_steps";
    if (first >= 0) detail += ", first failure at path " + std::to_string(first);
    return CheckResult{"", failures == 0 && stuck == 0, static_cast<double>(failures), 0.0, detail};
  }));

  ExitSolver solver(env, std::min(cfg.tol, kDefaultTol), cfg.depth);

  results.push_back(detail::run_check("crossing_back_sum", 1e-8, [&] {
    double worst = 0.0;
    for (std::int64_t i = 0; i > -opt.crossing_levels; --i) {
      const CrossingBackProbs cb = solver.crossing_back(i);
      worst = std::max(worst, std::abs(cb.total() - cb.q));
    }
    return CheckResult{"", worst < 1e-8, worst, 0.0, "levels 0.." + std::to_string(1 - opt.crossing_levels)};
  }));

  // Offspring laws depend on the level unless the environment is constant;
  // otherwise only level 0 (parent = immigrant) is used.
  OffspringTable table(R);
  for (const auto& p : paths) table.add(decompose_general(p, R));

  results.push_back(detail::run_check("offspring_tv", 0.02, [&] {
    const CrossingBackProbs cb = solver.crossing_back(0);
    double worst = 0.0;
    int used = 0;
    for (int parent = 0; parent < num_types(R); ++parent) {
      const OutcomeCounts obs = constant ? table.pooled(parent) : table.outcomes(0, parent);
      if (OffspringTable::count(obs) < 1000) continue;
      std::vector<Outcome> support;
      for (const auto& base : base_compositions(R, 10)) {
        Outcome o(static_cast<std::size_t>(num_types(R)), 0);
        std::copy(base.begin(), base.end(), o.begin());
        if (const int child = forced_child(parent, R); child >= 0) o[static_cast<std::size_t>(child)] = 1;
        support.push_back(o);
      }
      const double tv = offspring_total_variation(obs, R, 10, support,
                                                  [&](const Outcome& o) { return offspring_pmf(cb, parent, o); });
      worst = std::max(worst, tv);
      ++used;
    }
    if (used == 0) throw Error(ErrorCode::kInsufficientData, "no parent type with >= 1000 events");
    return CheckResult{"", worst < 0.02, worst, 0.0, std::to_string(used) + " parent types"};
  }));

  results.push_back(detail::run_check("immigration_frequency", 4.0, [&] {
    const RowVector law = solver.immigration_law(0);
    std::vector<std::int64_t> hits(law.size(), 0);
    for (const auto& p : paths) ++hits[static_cast<std::size_t>(decompose_general(p, R).immigration_type)];
    double worst = 0.0;
    const auto n = static_cast<std::int64_t>(paths.size());
    for (std::size_t t = 0; t < law.size(); ++t) {
      const double freq = static_cast<double>(hits[t]) / static_cast<double>(n);
      const double se = binomial_se(law[t], n);
      const double z = se > 0.0 ? std::abs(freq - law[t]) / se : (freq == law[t] ? 0.0 : INFINITY);
      worst = std::max(worst, z);
    }
    return CheckResult{"", worst <= 4.0, worst, 0.0, "max |z| over immigrant types"};
  }));

  if (R != 2) return results;

  std::vector<SiteLaw> positive_atoms;
  for (const auto& a : cfg.law.atoms()) {
    if (a.mean_increment() > 0.0) positive_atoms.push_back(a);
  }

  results.push_back(detail::run_check("wald_closed_form", 1e-10, [&] {
    double worst = 0.0;
    double worst_series = 0.0;
    for (const auto& a : positive_atoms) {
      const WaldReport w = wald_check(a, cfg.depth, cfg.tol);
      worst = std::max(worst, w.closed_form_residual);
      worst_series = std::max(worst_series, w.series_residual);
    }
    if (positive_atoms.empty()) throw Error(ErrorCode::kNotDriftPositive, "no drift-positive atom");
    return CheckResult{"", worst < 1e-10 && worst_series < 1e-8, worst,
                       0.0, "series residual " + detail::fmt(worst_series) + " (limit 1e-8)"};
  }));

  results.push_back(detail::run_check("geometric_series", 1e-8, [&] {
    double worst = 0.0;
    for (const auto& a : positive_atoms) {
      ExitSolver s(Environment::constant(a), std::min(cfg.tol, kDefaultTol), cfg.depth);
      const GeometricSeries g = geometric_series_mean_matrix(s.mean_matrix(0));
      for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
          worst = std::max(worst, std::abs(g.closed_form(r, c) - g.partial_sums(r, c)));
        }
      }
    }
    if (positive_atoms.empty()) throw Error(ErrorCode::kNotDriftPositive, "no drift-positive atom");
    return CheckResult{"", worst < 1e-8, worst, 0.0, "closed form vs 200 partial sums"};
  }));

  results.push_back(detail::run_check("density_analytic_vs_mc", 4.0, [&] {
    const double exact = invariant_density_series(solver, cfg.depth, cfg.tol).value;
    const DensityEstimate mc = estimate_density_mc(env, cfg.paths, opt.density_shift_depth,
                                                   hash_pair(cfg.seed, detail::kDensityStream), cfg.max_steps);
    const double z = std::abs(exact - mc.value) / mc.std_error;
    return CheckResult{"", z <= 4.0, z, 0.0,
                       "analytic " + detail::fmt(exact) + ", mc " + detail::fmt(mc.value) + " +- " +
                           detail::fmt(mc.std_error)};
  }));

  results.push_back(detail::run_check("drift_homogeneous_reduction", 1e-10, [&] {
    double worst = 0.0;
    for (const auto& a : positive_atoms) {
      const DriftReport d = drift(EnvironmentLaw::homogeneous(a), cfg.depth, cfg.tol);
      worst = std::max(worst, std::abs(d.v_p - a.mean_increment()));
    }
    if (positive_atoms.empty()) throw Error(ErrorCode::kNotDriftPositive, "no drift-positive atom");
    return CheckResult{"", worst < 1e-10, worst, 0.0, "|v_P - (p1 + 2p2 - q)| over atoms"};
  }));

  results.push_back(detail::run_check("lln_drift", 4.0, [&] {
    const DriftReport d = drift(cfg.law, cfg.depth, cfg.tol, cfg.env_samples, hash_pair(cfg.seed, detail::kDriftStream));
    const std::int64_t reps = opt.lln_replicas;
    std::vector<double> speeds(static_cast<std::size_t>(reps));
    const std::uint64_t base = hash_pair(cfg.seed, detail::kLlnStream);
    parallel_for(reps, [&](std::int64_t r) {
      const auto ur = static_cast<std::uint64_t>(r);
      const Environment e = sample_environment(cfg.law, Window{-cfg.n_steps, 2 * cfg.n_steps}, hash_pair(base, 2 * ur));
      Rng rng = make_stream(base, 2 * ur + 1);
      // Periodic laws: start from a uniformly chosen phase.
      const std::int64_t phase = e.period() ? static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(*e.period())) : 0;
      speeds[static_cast<std::size_t>(r)] =
          static_cast<double>(position_after(e.shifted(phase), cfg.n_steps, rng)) / static_cast<double>(cfg.n_steps);
    });
    RunningStats emp;
    for (double v : speeds) emp.add(v);
    const double se = std::sqrt(emp.std_error() * emp.std_error() + d.std_error * d.std_error);
    const double z = std::abs(emp.mean() - d.v_p) / se;
    return CheckResult{"", z <= 4.0, z, 0.0,
                       "v_P " + detail::fmt(d.v_p) + " (" + d.estimator + "), X_n/n " + detail::fmt(emp.mean()) +
                           " +- " + detail::fmt(emp.std_error())};
  }));

  return results;
}

inline bool all_passed(const std::vector<CheckResult>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const CheckResult& r) { return r.pass; });
}

}  // namespace rwre
