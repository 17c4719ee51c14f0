#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "rwre/env.hpp"

using namespace rwre;

namespace {

SiteLaw base_law() { return SiteLaw::create(0.2, {0.5, 0.3}, 0.01); }

void expect_error(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(SiteLaw, ValidR2) {
  const SiteLaw s = base_law();
  EXPECT_EQ(s.jump_bound(), 2);
  EXPECT_DOUBLE_EQ(s.q(), 0.2);
  EXPECT_DOUBLE_EQ(s.p(1), 0.5);
  EXPECT_DOUBLE_EQ(s.p(2), 0.3);
  EXPECT_EQ(s.p(3), 0.0);
  EXPECT_NEAR(s.mean_increment(), 0.9, 1e-15);
  EXPECT_DOUBLE_EQ(s.tail(1), 0.8);
  EXPECT_DOUBLE_EQ(s.tail(2), 0.3);
}

TEST(SiteLaw, NotSimplex) {
  expect_error(ErrorCode::kNotSimplex, [] { SiteLaw::create(0.5, {0.6, 0.2}, 0.01); });
  expect_error(ErrorCode::kNotSimplex, [] { SiteLaw::create(0.5, {0.7, -0.2}, 0.01); });
  expect_error(ErrorCode::kNotSimplex, [] { SiteLaw::create(NAN, {0.5, 0.5}, 0.01); });
}

TEST(SiteLaw, EllipticityViolated) {
  expect_error(ErrorCode::kEllipticityViolated, [] { SiteLaw::create(0.0, {1.0}, 0.01); });
  expect_error(ErrorCode::kEllipticityViolated, [] { SiteLaw::create(0.5, {0.499, 0.001}, 0.01); });
  EXPECT_NO_THROW(SiteLaw::create(0.5, {0.499, 0.001}, 0.001));
}

TEST(SiteLaw, ZeroEpsilonAllowsMissingJump) {
  const SiteLaw s = SiteLaw::create(0.3, {0.7, 0.0}, 0.0);
  EXPECT_EQ(s.p(2), 0.0);
  EXPECT_THROW(SiteLaw::create(0.3, {0.7, 0.0}), Error);
}

TEST(SiteLaw, RenormalizesWithinTolerance) {
  const SiteLaw s = SiteLaw::create(0.2, {0.5, 0.3 + 5e-13}, 0.01);
  EXPECT_NEAR(s.q() + s.p(1) + s.p(2), 1.0, 1e-15);
  EXPECT_THROW(SiteLaw::create(0.2, {0.5, 0.3 + 1e-9}, 0.01), Error);
}

TEST(SiteLaw, JumpBoundLimits) {
  EXPECT_THROW(SiteLaw::create(0.5, {}, 0.0), Error);
  EXPECT_THROW(SiteLaw::create(0.1, std::vector<double>(9, 0.1), 0.0), Error);
}

TEST(SiteLaw, JumpForPartitionsUnitInterval) {
  const SiteLaw s = base_law();
  EXPECT_EQ(s.jump_for(0.0), -1);
  EXPECT_EQ(s.jump_for(0.1999), -1);
  EXPECT_EQ(s.jump_for(0.2), 1);
  EXPECT_EQ(s.jump_for(0.6999), 1);
  EXPECT_EQ(s.jump_for(0.7), 2);
  EXPECT_EQ(s.jump_for(std::nextafter(1.0, 0.0)), 2);
}

TEST(Environment, ShiftIdentityAndInverse) {
  const auto a = SiteLaw::create(0.2, {0.5, 0.3});
  const auto b = SiteLaw::create(0.3, {0.4, 0.3});
  const auto c = SiteLaw::create(0.25, {0.45, 0.3});
  const Environment env = sample_environment(EnvironmentLaw::iid({a, b, c}, {0.2, 0.3, 0.5}), Window{-50, 50}, 7);
  const Environment same = shift(env, 0);
  const Environment back = shift(shift(env, 3), -3);
  for (std::int64_t x = -60; x <= 60; ++x) {
    EXPECT_EQ(same.at(x), env.at(x));
    EXPECT_EQ(back.at(x), env.at(x));
    EXPECT_EQ(shift(env, 5).at(x), env.at(x + 5));
  }
}

TEST(Environment, ShiftComposes) {
  const auto a = SiteLaw::create(0.2, {0.5, 0.3});
  const auto b = SiteLaw::create(0.3, {0.4, 0.3});
  const Environment env = sample_environment(EnvironmentLaw::iid({a, b}, {0.5, 0.5}), Window{-10, 10}, 99);
  for (std::int64_t s1 : {-7, -1, 0, 2, 11}) {
    for (std::int64_t s2 : {-4, 0, 3, 13}) {
      const Environment lhs = shift(shift(env, s1), s2);
      const Environment rhs = shift(env, s1 + s2);
      for (std::int64_t x = -30; x <= 30; ++x) ASSERT_EQ(lhs.at(x), rhs.at(x));
    }
  }
}

TEST(Environment, HomogeneousIsShiftInvariant) {
  const Environment env = sample_environment(EnvironmentLaw::homogeneous(base_law()), Window{-5, 5}, 1);
  EXPECT_TRUE(env.is_homogeneous());
  EXPECT_EQ(env.realized_laws().size(), 11u);
  for (const auto& s : env.realized_laws()) EXPECT_EQ(s, base_law());
  for (std::int64_t k : {-100, -1, 1, 42}) EXPECT_EQ(shift(env, k).at(0), base_law());
}

TEST(Environment, PeriodicAnchoredAtZero) {
  const auto s0 = SiteLaw::create(0.2, {0.5, 0.3});
  const auto s1 = SiteLaw::create(0.3, {0.4, 0.3});
  const Environment env = sample_environment(EnvironmentLaw::periodic({s0, s1}), Window{-5, 5}, 3);
  EXPECT_EQ(env.at(4), s0);
  EXPECT_EQ(env.at(-1), s1);
  EXPECT_EQ(env.at(0), s0);
  EXPECT_EQ(env.at(-4), s0);
  ASSERT_TRUE(env.period().has_value());
  EXPECT_EQ(*env.period(), 2);
}

TEST(Environment, IidDeterministicAndWindowIndependent) {
  const auto a = SiteLaw::create(0.2, {0.5, 0.3});
  const auto b = SiteLaw::create(0.3, {0.4, 0.3});
  const auto law = EnvironmentLaw::iid({a, b}, {0.5, 0.5});
  const Environment e1 = sample_environment(law, Window{-5, 5}, 11);
  const Environment e2 = sample_environment(law, Window{-5, 5}, 11);
  const Environment wide = sample_environment(law, Window{-500, 500}, 11);
  const Environment grown = e1.extended(Window{-1000, 20});
  EXPECT_EQ(grown.window(), (Window{-1000, 20}));
  for (std::int64_t x = -5; x <= 5; ++x) {
    EXPECT_EQ(e1.at(x), e2.at(x));
    EXPECT_EQ(e1.at(x), wide.at(x));
    EXPECT_EQ(e1.at(x), grown.at(x));
  }
  const Environment other = sample_environment(law, Window{-5, 5}, 12);
  int differ = 0;
  for (std::int64_t x = -200; x <= 200; ++x) differ += !(other.at(x) == e1.at(x));
  EXPECT_GT(differ, 100);
}

TEST(Environment, IidAtomFrequencies) {
  const auto a = SiteLaw::create(0.2, {0.5, 0.3});
  const auto b = SiteLaw::create(0.3, {0.4, 0.3});
  const auto c = SiteLaw::create(0.25, {0.45, 0.3});
  const std::vector<double> w{0.2, 0.3, 0.5};
  const Environment env = sample_environment(EnvironmentLaw::iid({a, b, c}, w), Window{0, 99'999}, 2024);
  std::map<int, std::int64_t> hits;
  const std::int64_t n = 100'000;
  for (std::int64_t x = 0; x < n; ++x) {
    const SiteLaw& s = env.at(x);
    hits[s == a ? 0 : (s == b ? 1 : 2)]++;
  }
  for (int k = 0; k < 3; ++k) {
    const double f = static_cast<double>(hits[k]) / n;
    const double se = std::sqrt(w[k] * (1 - w[k]) / n);
    EXPECT_LT(std::abs(f - w[k]), 4 * se) << "atom " << k;
  }
}

TEST(Environment, FromTableFallsBack) {
  const auto a = SiteLaw::create(0.2, {0.5, 0.3});
  const auto b = SiteLaw::create(0.3, {0.4, 0.3});
  const Environment env = Environment::from_table(-1, {b, b, b}, Environment::constant(a));
  EXPECT_EQ(env.at(-2), a);
  EXPECT_EQ(env.at(-1), b);
  EXPECT_EQ(env.at(1), b);
  EXPECT_EQ(env.at(2), a);
  EXPECT_EQ(env.shifted(2).at(-1), b);
  EXPECT_EQ(env.shifted(2).at(1), a);
}

TEST(EnvironmentLaw, RejectsBadWeights) {
  const auto a = SiteLaw::create(0.2, {0.5, 0.3});
  const auto b = SiteLaw::create(0.3, {0.4, 0.3});
  EXPECT_THROW(EnvironmentLaw::iid({a, b}, {0.5, 0.6}), Error);
  EXPECT_THROW(EnvironmentLaw::iid({a, b}, {1.5, -0.5}), Error);
  EXPECT_THROW(EnvironmentLaw::iid({a}, {0.5, 0.5}), Error);
  EXPECT_THROW(EnvironmentLaw::periodic({}), Error);
  EXPECT_THROW(EnvironmentLaw::periodic({a, SiteLaw::create(0.25, {0.25, 0.25, 0.25})}), Error);
}
