#include "pagpass/apportion.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pagpass/error.hpp"
#include "pagpass/hash.hpp"

namespace pagpass {
namespace {

TEST(Apportion, SplitRatios) {
  const std::vector<double> r{0.7, 0.1, 0.2};
  EXPECT_EQ(apportion(10, r), (std::vector<std::uint64_t>{7, 1, 2}));
  // Quotas 2.1 / 0.3 / 0.6: the single leftover unit goes to the largest remainder.
  EXPECT_EQ(apportion(3, r), (std::vector<std::uint64_t>{2, 0, 1}));
}

TEST(Apportion, TiesPreferHigherWeightThenLowerIndex) {
  EXPECT_EQ(apportion(1, std::vector<double>{1, 1, 1}), (std::vector<std::uint64_t>{1, 0, 0}));
  EXPECT_EQ(apportion(2, std::vector<double>{1, 1, 1}), (std::vector<std::uint64_t>{1, 1, 0}));
  EXPECT_EQ(apportion(1, std::vector<double>{0.5, 0.5}), (std::vector<std::uint64_t>{1, 0}));
  EXPECT_EQ(apportion(3, std::vector<double>{1.0, 3.0, 2.0}), (std::vector<std::uint64_t>{0, 2, 1}));
}

TEST(Apportion, ZeroWeightsGetNothing) {
  EXPECT_EQ(apportion(5, std::vector<double>{0, 1, 0}), (std::vector<std::uint64_t>{0, 5, 0}));
  EXPECT_EQ(apportion(0, std::vector<double>{0, 0}), (std::vector<std::uint64_t>{0, 0}));
  EXPECT_THROW(apportion(1, std::vector<double>{0, 0}), InvalidArgument);
  EXPECT_THROW(apportion(1, std::vector<double>{-1, 2}), InvalidArgument);
}

TEST(Apportion, ConservesTotalOnRandomInputs) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<double> w(n);
    for (double& x : w) x = rng.next_unit() < 0.1 ? 0.0 : rng.next_unit();
    w[rng() % n] = 0.5;
    const std::uint64_t total = rng() % 1'000'000;
    const auto out = apportion(total, w);
    ASSERT_EQ(std::accumulate(out.begin(), out.end(), std::uint64_t{0}), total);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double quota = static_cast<double>(total) * w[i] / sum;
      // Hamilton's method satisfies the quota rule.
      ASSERT_GE(static_cast<double>(out[i]), std::floor(quota) - 1e-6);
      ASSERT_LE(static_cast<double>(out[i]), std::ceil(quota) + 1e-6);
    }
  }
}

TEST(ApportionCapped, RedistributesExcess) {
  const std::vector<double> w{0.7, 0.2, 0.1};
  const std::vector<std::uint64_t> caps{10, 10, 10};
  EXPECT_EQ(apportion_capped(25, w, caps), (std::vector<std::uint64_t>{10, 10, 5}));
  EXPECT_EQ(apportion_capped(30, w, caps), (std::vector<std::uint64_t>{10, 10, 10}));
  EXPECT_THROW(apportion_capped(31, w, caps), InvalidArgument);
}

TEST(ApportionCapped, MatchesPlainApportionWhenCapsAreLoose) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 20;
    std::vector<double> w(n);
    for (double& x : w) x = 0.01 + rng.next_unit();
    const std::uint64_t total = rng() % 5000;
    const std::vector<std::uint64_t> caps(n, total);
    ASSERT_EQ(apportion_capped(total, w, caps), apportion(total, w));
  }
}

TEST(ApportionCapped, RespectsCapsAndConserves) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 52;
    std::vector<double> w(n);
    for (double& x : w) x = std::pow(rng.next_unit(), 4.0) + 1e-9;
    const std::uint64_t cap = 1 + rng() % 100;
    const std::vector<std::uint64_t> caps(n, cap);
    const std::uint64_t total = rng() % (cap * n + 1);
    const auto out = apportion_capped(total, w, caps);
    ASSERT_EQ(std::accumulate(out.begin(), out.end(), std::uint64_t{0}), total);
    for (auto v : out) ASSERT_LE(v, cap);
  }
}

}  // namespace
}  // namespace pagpass
