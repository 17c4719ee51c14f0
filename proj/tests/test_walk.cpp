#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "rwre/analytics.hpp"
#include "rwre/stats.hpp"
#include "rwre/walk.hpp"

using namespace rwre;

namespace {

const SiteLaw kBase = SiteLaw::create(0.2, {0.5, 0.3});

}  // namespace

TEST(Step, LeftFrequencyMatchesQ) {
  const SiteLaw s = SiteLaw::create(0.05, {0.5, 0.45});
  const Environment env = Environment::constant(s);
  Rng rng = make_stream(5, 0);
  const std::int64_t n = 1'000'000;
  std::array<std::int64_t, 3> hits{};
  for (std::int64_t k = 0; k < n; ++k) {
    const auto y = step(env, 10, rng);
    ASSERT_TRUE(y == 9 || y == 11 || y == 12);
    ++hits[static_cast<std::size_t>(y == 9 ? 0 : y - 10)];
  }
  EXPECT_EQ(hits[0] + hits[1] + hits[2], n);
  const double probs[] = {0.05, 0.5, 0.45};
  for (int c = 0; c < 3; ++c) {
    EXPECT_LT(std::abs(static_cast<double>(hits[c]) / n - probs[c]), 4 * binomial_se(probs[c], n));
  }
}

TEST(Ladder, NoLeftJumpsMeansOneStep) {
  const Environment env = Environment::constant(SiteLaw::create_unchecked(0.0, {0.6, 0.4}));
  Rng rng = make_stream(1, 0);
  for (int k = 0; k < 1000; ++k) EXPECT_EQ(simulate_until_ladder(env, rng).t1(), 1);
}

TEST(Ladder, MeanT1MatchesClosedForm) {
  const Environment env = Environment::constant(kBase);
  const auto batch = simulate_ladder_batch(env, 1'000'000, 42);
  RunningStats t1;
  for (const auto& p : batch) t1.add(static_cast<double>(p->t1()));
  const double exact = homogeneous_closed_forms(kBase).e_t1;
  EXPECT_LT(std::abs(t1.mean() - exact), 4 * t1.std_error()) << t1.mean() << " vs " << exact;
}

TEST(Ladder, PathInvariants) {
  const auto a = SiteLaw::create(0.3, {0.4, 0.3});
  const Environment env = sample_environment(EnvironmentLaw::iid({kBase, a}, {0.5, 0.5}), Window{-10, 10}, 3);
  const auto batch = simulate_ladder_batch(env, 100'000, 8);
  for (const auto& p : batch) {
    ASSERT_TRUE(p.has_value());
    ASSERT_NO_THROW(validate_ladder_path(*p, 2));
    const auto v = local_times(*p);
    std::int64_t total = 0;
    for (const auto& [site, n] : v) {
      ASSERT_LE(site, 0);
      total += n;
    }
    ASSERT_EQ(total, p->t1());
    ASSERT_GE(p->ending_jump(), 1);
    ASSERT_LE(p->ending_jump(), 2);
  }
}

TEST(Ladder, HandPath) {
  const WalkPath p{{0, -1, 0, 1}};
  EXPECT_NO_THROW(validate_ladder_path(p, 2));
  EXPECT_EQ(p.t1(), 3);
  EXPECT_EQ(p.ending_jump(), 1);
  EXPECT_EQ(p.ending_origin(), 0);
  EXPECT_EQ(p.min_site(), -1);
  const auto v = local_times(p);
  EXPECT_EQ(v, (LocalTimes{{0, 2}, {-1, 1}}));
  EXPECT_EQ(local_times(WalkPath{{0, 1}}), (LocalTimes{{0, 1}}));
  EXPECT_EQ(local_time_at(p, 0), 2);
  EXPECT_EQ(local_time_at(p, 1), 0);
}

TEST(Ladder, MalformedPaths) {
  EXPECT_THROW(validate_ladder_path(WalkPath{{0}}, 2), Error);
  EXPECT_THROW(validate_ladder_path(WalkPath{{1, 2}}, 2), Error);
  EXPECT_THROW(validate_ladder_path(WalkPath{{0, -2, 1}}, 2), Error);
  EXPECT_THROW(validate_ladder_path(WalkPath{{0, 3}}, 2), Error);
  EXPECT_THROW(validate_ladder_path(WalkPath{{0, -1, 0}}, 2), Error);
  EXPECT_THROW(validate_ladder_path(WalkPath{{0, 1, 2}}, 2), Error);
  EXPECT_NO_THROW(validate_ladder_path(WalkPath{{0, 3}}, 3));
}

TEST(Ladder, Deterministic) {
  const Environment env = Environment::constant(kBase);
  Rng r1 = make_stream(77, 3);
  Rng r2 = make_stream(77, 3);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(simulate_until_ladder(env, r1).sites, simulate_until_ladder(env, r2).sites);
  const auto b1 = simulate_ladder_batch(env, 10'000, 5);
  const auto b2 = simulate_ladder_batch(env, 10'000, 5);
  for (std::size_t k = 0; k < b1.size(); ++k) ASSERT_EQ(b1[k]->sites, b2[k]->sites);
}

TEST(Ladder, BatchMatchesSequentialStreams) {
  const Environment env = Environment::constant(kBase);
  const std::int64_t n = 2 * kPathChunk + 17;
  const auto batch = simulate_ladder_batch(env, n, 9);
  for (std::int64_t c = 0; c * kPathChunk < n; ++c) {
    Rng rng = make_stream(9, static_cast<std::uint64_t>(c));
    for (std::int64_t k = c * kPathChunk; k < std::min(n, (c + 1) * kPathChunk); ++k) {
      ASSERT_EQ(simulate_until_ladder(env, rng).sites, batch[static_cast<std::size_t>(k)]->sites);
    }
  }
}

TEST(Ladder, MaxStepsExceeded) {
  const Environment env = Environment::constant(SiteLaw::create(0.7, {0.2, 0.1}));
  Rng rng = make_stream(1, 1);
  int stuck = 0;
  for (int k = 0; k < 100; ++k) {
    try {
      simulate_until_ladder(env, rng, 1000);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kMaxStepsExceeded);
      ++stuck;
    }
  }
  EXPECT_GT(stuck, 0);
  const auto batch = simulate_ladder_batch(env, 200, 3, 1000);
  EXPECT_GT(std::count(batch.begin(), batch.end(), std::nullopt), 0);
}

TEST(FixedN, SingleStep) {
  const Environment env = Environment::constant(kBase);
  Rng rng = make_stream(2, 2);
  for (int k = 0; k < 100; ++k) {
    const auto traj = simulate_fixed_n(env, 1, rng);
    ASSERT_EQ(traj.size(), 2u);
    EXPECT_TRUE(traj[1] == -1 || traj[1] == 1 || traj[1] == 2);
  }
  EXPECT_THROW(simulate_fixed_n(env, 0, rng), Error);
}

TEST(FixedN, HomogeneousSpeed) {
  const Environment env = Environment::constant(kBase);
  Rng rng = make_stream(3, 0);
  const std::int64_t n = 1'000'000;
  const auto traj = simulate_fixed_n(env, n, rng);
  const double var = 0.2 + 0.5 + 4 * 0.3 - 0.81;
  EXPECT_LT(std::abs(static_cast<double>(traj.back()) / n - 0.9), 4 * std::sqrt(var / n));
  Rng a = make_stream(4, 0);
  Rng b = make_stream(4, 0);
  EXPECT_EQ(position_after(env, 5000, a), simulate_fixed_n(env, 5000, b).back());
}
