#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rwre/error.hpp"
#include "rwre/rng.hpp"

namespace rwre {

inline constexpr int kMaxJump = 8;
inline constexpr double kDefaultEpsilon = 1e-6;
inline constexpr double kSimplexTolerance = 1e-12;

/// Jump distribution at one site: -1 with probability q, +k with probability p[k].
class SiteLaw {
 public:
  /// Validated constructor. The ellipticity bound p[k]/q >= epsilon is
  /// checked for every k; epsilon = 0 only demands q > 0.
  static SiteLaw create(double q, const std::vector<double>& p, double epsilon = kDefaultEpsilon) {
    SiteLaw law = build(q, p);
    if (!(law.q_ > 0.0)) {
      throw Error(ErrorCode::kEllipticityViolated, "q must be positive (p/q undefined)");
    }
    if (epsilon < 0.0 || !std::isfinite(epsilon)) {
      throw Error(ErrorCode::kInvalidArgument, "epsilon must be a finite nonnegative number");
    }
    for (int k = 1; k <= law.r_; ++k) {
      if (law.p(k) / law.q_ < epsilon) {
        throw Error(ErrorCode::kEllipticityViolated,
                    "p[" + std::to_string(k) + "]/q = " + std::to_string(law.p(k) / law.q_) +
                        " below epsilon " + std::to_string(epsilon));
      }
    }
    return law;
  }

  /// Simplex-checked only. Lets tests build q = 0 and similar degenerate laws.
  static SiteLaw create_unchecked(double q, const std::vector<double>& p) { return build(q, p); }

  int jump_bound() const noexcept { return r_; }
  double q() const noexcept { return q_; }

  /// Probability of the jump +k; zero for k outside [1, R].
  double p(int k) const noexcept { return (k >= 1 && k <= r_) ? p_[k - 1] : 0.0; }

  /// Sum of p[m] for m >= k.
  double tail(int k) const noexcept {
    double s = 0.0;
    for (int m = std::max(k, 1); m <= r_; ++m) s += p_[m - 1];
    return s;
  }

  double mean_increment() const noexcept {
    double m = -q_;
    for (int k = 1; k <= r_; ++k) m += k * p_[k - 1];
    return m;
  }

  /// Maps a uniform draw in [0, 1) to an increment in {-1, 1, ..., R}.
  int jump_for(double u) const noexcept {
    if (u < cdf_[0]) return -1;
    for (int k = 1; k < r_; ++k) {
      if (u < cdf_[k]) return k;
    }
    return r_;
  }

  friend bool operator==(const SiteLaw& a, const SiteLaw& b) noexcept {
    if (a.r_ != b.r_ || a.q_ != b.q_) return false;
    for (int k = 0; k < a.r_; ++k) {
      if (a.p_[k] != b.p_[k]) return false;
    }
    return true;
  }

 private:
  SiteLaw() = default;

  static SiteLaw build(double q, const std::vector<double>& p) {
    if (p.empty() || p.size() > static_cast<std::size_t>(kMaxJump)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "jump bound R must be in [1, " + std::to_string(kMaxJump) + "]");
    }
    double total = q;
    bool ok = std::isfinite(q) && q >= 0.0;
    for (double x : p) {
      ok = ok && std::isfinite(x) && x >= 0.0;
      total += x;
    }
    if (!ok) throw Error(ErrorCode::kNotSimplex, "negative or non-finite probability");
    if (std::abs(total - 1.0) > kSimplexTolerance) {
      throw Error(ErrorCode::kNotSimplex, "probabilities sum to " + std::to_string(total));
    }
    SiteLaw law;
    law.r_ = static_cast<int>(p.size());
    law.q_ = q / total;
    for (int k = 0; k < law.r_; ++k) law.p_[k] = p[k] / total;
    double c = law.q_;
    law.cdf_[0] = c;
    for (int k = 0; k < law.r_; ++k) {
      c += law.p_[k];
      law.cdf_[k + 1] = c;
    }
    return law;
  }

  int r_ = 0;
  double q_ = 0.0;
  std::array<double, kMaxJump> p_{};
  std::array<double, kMaxJump + 1> cdf_{};
};

/// Closed integer range [lo, hi].
struct Window {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  bool contains(std::int64_t x) const noexcept { return lo <= x && x <= hi; }
  std::int64_t size() const noexcept { return hi - lo + 1; }
  friend bool operator==(const Window&, const Window&) = default;
};

/// A distribution over environments.
class EnvironmentLaw {
 public:
  enum class Kind { kHomogeneous, kIidFiniteSupport, kPeriodic };

  static EnvironmentLaw homogeneous(SiteLaw law) {
    return EnvironmentLaw(Kind::kHomogeneous, {std::move(law)}, {1.0});
  }

  static EnvironmentLaw iid(std::vector<SiteLaw> atoms, std::vector<double> weights) {
    if (atoms.empty() || atoms.size() != weights.size()) {
      throw Error(ErrorCode::kInvalidArgument, "i.i.d. law needs one weight per atom");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!std::isfinite(w) || w < 0.0) throw Error(ErrorCode::kNotSimplex, "negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > kSimplexTolerance) {
      throw Error(ErrorCode::kNotSimplex, "weights sum to " + std::to_string(total));
    }
    for (double& w : weights) w /= total;
    return EnvironmentLaw(Kind::kIidFiniteSupport, std::move(atoms), std::move(weights));
  }

  static EnvironmentLaw periodic(std::vector<SiteLaw> table) {
    if (table.empty()) throw Error(ErrorCode::kInvalidArgument, "empty period table");
    std::vector<double> w(table.size(), 1.0 / static_cast<double>(table.size()));
    return EnvironmentLaw(Kind::kPeriodic, std::move(table), std::move(w));
  }

  Kind kind() const noexcept { return kind_; }
  const std::vector<SiteLaw>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  int jump_bound() const noexcept { return atoms_.front().jump_bound(); }

 private:
  EnvironmentLaw(Kind kind, std::vector<SiteLaw> atoms, std::vector<double> weights)
      : kind_(kind), atoms_(std::move(atoms)), weights_(std::move(weights)) {
    for (const auto& a : atoms_) {
      if (a.jump_bound() != atoms_.front().jump_bound()) {
        throw Error(ErrorCode::kInvalidArgument, "all atoms must share the same jump bound R");
      }
    }
  }

  Kind kind_;
  std::vector<SiteLaw> atoms_;
  std::vector<double> weights_;
};

namespace detail {

// Site -> atom rule. Immutable once built and shared between shifted views.
struct SiteRule {
  enum class Kind { kConstant, kCyclic, kSeeded, kTable };

  Kind kind = Kind::kConstant;
  std::vector<SiteLaw> atoms;
  std::vector<double> cumulative;  // kSeeded
  std::uint64_t seed = 0;          // kSeeded
  std::int64_t table_lo = 0;       // kTable
  std::vector<std::uint32_t> table;
  std::shared_ptr<const SiteRule> fallback;  // kTable, outside the table
  std::int64_t fallback_offset = 0;

  const SiteLaw& law_at(std::int64_t x) const {
    switch (kind) {
      case Kind::kConstant:
        return atoms.front();
      case Kind::kCyclic: {
        const auto n = static_cast<std::int64_t>(atoms.size());
        return atoms[static_cast<std::size_t>(((x % n) + n) % n)];
      }
      case Kind::kSeeded: {
        const double u = to_unit(hash_pair(seed, static_cast<std::uint64_t>(x)));
        std::size_t i = 0;
        while (i + 1 < cumulative.size() && u >= cumulative[i]) ++i;
        return atoms[i];
      }
      case Kind::kTable: {
        const std::int64_t off = x - table_lo;
        if (off >= 0 && off < static_cast<std::int64_t>(table.size())) {
          return atoms[table[static_cast<std::size_t>(off)]];
        }
        return fallback->law_at(x + fallback_offset);
      }
    }
    return atoms.front();
  }
};

}  // namespace detail

/// A realized environment viewed from an origin. Shifting only moves the
/// origin; the site rule is shared and never mutated, so copies are cheap and
/// safe to read from several threads.
class Environment {
 public:
  /// Same law at every site.
  static Environment constant(SiteLaw law) {
    auto rule = std::make_shared<detail::SiteRule>();
    rule->kind = detail::SiteRule::Kind::kConstant;
    rule->atoms = {std::move(law)};
    return Environment(std::move(rule), Window{0, 0}, 1);
  }

  /// table[0] at site 0, table[k mod n] at site k.
  static Environment cyclic(std::vector<SiteLaw> table) {
    if (table.empty()) throw Error(ErrorCode::kInvalidArgument, "empty period table");
    auto rule = std::make_shared<detail::SiteRule>();
    rule->kind = detail::SiteRule::Kind::kCyclic;
    const auto n = static_cast<std::int64_t>(table.size());
    rule->atoms = std::move(table);
    check_common_r(rule->atoms);
    return Environment(std::move(rule), Window{0, n - 1}, n);
  }

  /// Explicit laws on [lo, lo + laws.size() - 1]; `outside` everywhere else.
  static Environment from_table(std::int64_t lo, std::vector<SiteLaw> laws, const Environment& outside) {
    if (laws.empty()) throw Error(ErrorCode::kInvalidArgument, "empty site table");
    auto rule = std::make_shared<detail::SiteRule>();
    rule->kind = detail::SiteRule::Kind::kTable;
    rule->table_lo = lo;
    rule->atoms = std::move(laws);
    rule->table.resize(rule->atoms.size());
    std::iota(rule->table.begin(), rule->table.end(), 0u);
    rule->fallback = outside.rule_;
    rule->fallback_offset = outside.offset_;
    check_common_r(rule->atoms);
    if (outside.jump_bound() != rule->atoms.front().jump_bound()) {
      throw Error(ErrorCode::kInvalidArgument, "table and fallback jump bounds differ");
    }
    const auto hi = lo + static_cast<std::int64_t>(rule->atoms.size()) - 1;
    return Environment(std::move(rule), Window{lo, hi}, std::nullopt);
  }

  const SiteLaw& at(std::int64_t x) const { return rule_->law_at(x + offset_); }

  /// shifted(k).at(x) == at(x + k).
  Environment shifted(std::int64_t k) const {
    Environment e = *this;
    e.offset_ += k;
    e.window_ = Window{window_.lo - k, window_.hi - k};
    return e;
  }

  /// Marks [lo, hi] as realized. Sites are a pure function of the rule, so
  /// growing the window never changes laws that were already visible.
  Environment extended(Window w) const {
    Environment e = *this;
    e.window_ = Window{std::min(window_.lo, w.lo), std::max(window_.hi, w.hi)};
    return e;
  }

  std::vector<SiteLaw> realized_laws() const {
    std::vector<SiteLaw> out;
    out.reserve(static_cast<std::size_t>(window_.size()));
    for (auto x = window_.lo; x <= window_.hi; ++x) out.push_back(at(x));
    return out;
  }

  Window window() const noexcept { return window_; }
  std::int64_t origin_offset() const noexcept { return offset_; }
  int jump_bound() const { return rule_->atoms.front().jump_bound(); }

  /// A period, when the environment is known to be periodic (1 for
  /// constant environments, the table length for cyclic ones).
  std::optional<std::int64_t> period() const noexcept { return period_; }
  bool is_homogeneous() const noexcept { return period_ == 1; }

 private:
  friend Environment sample_environment(const EnvironmentLaw&, Window, std::uint64_t);

  Environment(std::shared_ptr<const detail::SiteRule> rule, Window w, std::optional<std::int64_t> period)
      : rule_(std::move(rule)), window_(w), period_(period) {}

  static void check_common_r(const std::vector<SiteLaw>& laws) {
    for (const auto& l : laws) {
      if (l.jump_bound() != laws.front().jump_bound()) {
        throw Error(ErrorCode::kInvalidArgument, "all sites must share the same jump bound R");
      }
    }
  }

  std::shared_ptr<const detail::SiteRule> rule_;
  std::int64_t offset_ = 0;
  Window window_{};
  std::optional<std::int64_t> period_;
};

inline Environment shift(const Environment& env, std::int64_t k) { return env.shifted(k); }

/// Draws an environment from `law`. Sites are derived from (seed, site) so
/// the realization does not depend on the window or on evaluation order.
inline Environment sample_environment(const EnvironmentLaw& law, Window window, std::uint64_t seed) {
  if (window.hi < window.lo) throw Error(ErrorCode::kInvalidArgument, "empty window");
  Environment env = [&] {
    switch (law.kind()) {
      case EnvironmentLaw::Kind::kHomogeneous:
        return Environment::constant(law.atoms().front());
      case EnvironmentLaw::Kind::kPeriodic:
        return Environment::cyclic(law.atoms());
      case EnvironmentLaw::Kind::kIidFiniteSupport:
        break;
    }
    auto rule = std::make_shared<detail::SiteRule>();
    rule->kind = detail::SiteRule::Kind::kSeeded;
    rule->atoms = law.atoms();
    rule->seed = seed;
    double c = 0.0;
    for (double w : law.weights()) {
      c += w;
      rule->cumulative.push_back(c);
    }
    rule->cumulative.back() = 1.0;
    return Environment(std::move(rule), window, std::nullopt);
  }();
  return Environment(env.rule_, window, env.period_);
}

}  // namespace rwre
