#include <gtest/gtest.h>

#include "forge/hash.hpp"
#include "forge/stats.hpp"
#include "support/oracles.hpp"

using namespace forge;
using namespace forge::stats;

TEST(Pearson, PerfectNegative) {
  const std::vector<double> xs = {1, 2, 3}, ys = {6, 4, 2};
  const auto r = pearson(xs, ys, "x");
  EXPECT_EQ(r.r, -1.0);
  EXPECT_EQ(r.p_value, 0.0);
  EXPECT_EQ(r.n_points, 3u);
  EXPECT_EQ(r.metric_name, "x");
}

TEST(Pearson, KnownSmallSample) {
  // r = 0.8 exactly for these points; p from the t distribution with 3 df
  const std::vector<double> xs = {1, 2, 3, 4, 5}, ys = {2, 1, 4, 3, 5};
  const auto r = pearson(xs, ys);
  EXPECT_NEAR(r.r, 0.8, 1e-15);
  const auto ref = oracle::pearson_reference(xs, ys);
  EXPECT_NEAR(r.p_value, ref.p, 1e-12);
  EXPECT_NEAR(r.p_value, 0.10408803866182783, 1e-9);
}

TEST(Pearson, AgreesWithExtendedPrecision) {
  SplitMix64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 3 + rng.below(60);
    std::vector<double> xs(n), ys(n);
    const double mix = rng.unit();
    for (std::size_t j = 0; j < n; ++j) {
      xs[j] = rng.unit() * 10.0;
      ys[j] = mix * xs[j] + (1.0 - mix) * rng.unit() * 10.0;
    }
    const auto got = pearson(xs, ys);
    const auto want = oracle::pearson_reference(xs, ys);
    EXPECT_NEAR(got.r, want.r, 1e-12);
    EXPECT_NEAR(got.p_value, want.p, 1e-12);
  }
}

TEST(Pearson, Degenerate) {
  const std::vector<double> two = {1, 2}, flat = {3, 3, 3}, three = {1, 2, 3};
  try {
    pearson(two, two);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
  }
  EXPECT_THROW(pearson(flat, three), Error);
  EXPECT_THROW(pearson(three, two), Error);
}
