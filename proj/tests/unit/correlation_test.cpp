#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ndmt/correlation.hpp"
#include "ndmt/error.hpp"
#include "oracles.hpp"

using namespace ndmt;

namespace {

using Vec = std::vector<double>;

Vec identity(std::size_t n) {
  Vec v(n);
  std::iota(v.begin(), v.end(), 1.0);
  return v;
}

}  // namespace

TEST(Ranks, AverageTies) {
  EXPECT_EQ(average_ranks(Vec{10, 20, 20, 5}), (Vec{2, 3.5, 3.5, 1}));
  EXPECT_EQ(average_ranks(Vec{1, 1, 1}), (Vec{2, 2, 2}));
}

TEST(Correlation, PermutationPAnchorsForFiveSystems) {
  const Vec x = identity(5);
  const Vec one_swap{1, 2, 3, 5, 4};
  const CorrelationResult r = correlate(x, one_swap);
  EXPECT_NEAR(r.rho, 0.9, 1e-12);
  EXPECT_NEAR(r.tau, 0.8, 1e-12);
  EXPECT_NEAR(r.p_rho, 5.0 / 120.0, 1e-12);
  EXPECT_NEAR(r.p_tau, 5.0 / 120.0, 1e-12);
  const CorrelationResult perfect = correlate(x, x);
  EXPECT_EQ(perfect.rho, 1.0);
  EXPECT_EQ(perfect.tau, 1.0);
  EXPECT_NEAR(perfect.p_rho, 1.0 / 120.0, 1e-12);
  EXPECT_NEAR(perfect.p_tau, 1.0 / 120.0, 1e-12);
}

TEST(Correlation, MatchesBruteForceEnumeration) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 5;
    Vec x(n), y(n);
    for (auto& v : x) v = static_cast<double>(rng() % 5);
    for (auto& v : y) v = static_cast<double>(rng() % 5);
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
      continue;
    }
    const CorrelationResult r = correlate(x, y);
    EXPECT_NEAR(r.rho, oracle::spearman(x, y), 1e-12);
    EXPECT_NEAR(r.tau, oracle::kendall(x, y), 1e-12);
    EXPECT_NEAR(r.p_rho, oracle::permutation_p(x, y, oracle::spearman), 1e-12);
    EXPECT_NEAR(r.p_tau, oracle::permutation_p(x, y, oracle::kendall), 1e-12);
  }
}

TEST(Correlation, AlternativesAreConsistent) {
  const Vec x = identity(6);
  const Vec y{2, 1, 4, 3, 6, 5};
  const auto g = spearman(x, y, Alternative::greater), l = spearman(x, y, Alternative::less);
  const auto t = spearman(x, y, Alternative::two_sided);
  EXPECT_EQ(g.value, l.value);
  EXPECT_LT(g.p, 0.5);
  EXPECT_GT(l.p, 0.5);
  EXPECT_GE(t.p, g.p);
  // Reversing y swaps the roles of the one-sided alternatives.
  EXPECT_NEAR(spearman(x, Vec{5, 6, 3, 4, 1, 2}, Alternative::less).p, g.p, 1e-12);
  EXPECT_NEAR(kendall(x, Vec{5, 6, 3, 4, 1, 2}, Alternative::less).p, kendall(x, y, Alternative::greater).p, 1e-12);
}

TEST(Correlation, SignsAgreeForFewSystems) {
  for (std::size_t n = 3; n <= 5; ++n) {
    for (const auto& p : oracle::permutations(n)) {
      Vec y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<double>(p[i]);
      const CorrelationResult r = correlate(identity(n), y);
      EXPECT_GE(r.rho * r.tau, 0.0);
    }
  }
}

TEST(Correlation, SignsCanDisagreeFromSixSystems) {
  const CorrelationResult r = correlate(Vec{0, 1, 2, 3, 4, 5}, Vec{0, 3, 5, 4, 2, 1});
  EXPECT_GT(r.rho, 0.0);
  EXPECT_LT(r.tau, 0.0);
  EXPECT_NEAR(r.rho, 1.0 / 35.0, 1e-12);
  EXPECT_NEAR(r.tau, -1.0 / 15.0, 1e-12);
}

TEST(Correlation, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 15;
    Vec x(n), y(n), tx(n), ty(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = u(rng);
      y[i] = x[i] + u(rng);
      tx[i] = std::exp(x[i]);
      ty[i] = 5.0 * y[i] * y[i] * y[i] - 2.0;
    }
    const auto a = correlate(x, y), b = correlate(tx, ty);
    EXPECT_NEAR(a.rho, b.rho, 1e-12);
    EXPECT_NEAR(a.tau, b.tau, 1e-12);
    EXPECT_NEAR(a.p_rho, b.p_rho, 1e-12);
    EXPECT_NEAR(a.p_tau, b.p_tau, 1e-12);
  }
}

TEST(Correlation, NormalApproximationForLargerSamples) {
  // Pinned against scipy's asymptotic kendalltau and the z = rho * sqrt(n - 1)
  // Spearman approximation.
  const Vec x = identity(12);
  const Vec y{2, 1, 4, 3, 6, 5, 8, 7, 10, 12, 9, 11};
  const auto k = kendall(x, y);
  EXPECT_NEAR(k.value, 0.7878787878787877, 1e-12);
  EXPECT_NEAR(k.p, 0.0001813929891404864, 1e-12);
  const auto s = spearman(x, y);
  EXPECT_NEAR(s.value, 0.9370629370629372, 1e-12);
  EXPECT_NEAR(s.p, 0.0009421531551983512, 1e-12);

  const Vec xt{1, 1, 2, 3, 3, 3, 4, 5, 6, 7, 8, 8};
  const Vec yt{1, 2, 2, 3, 4, 4, 5, 5, 7, 6, 8, 9};
  EXPECT_NEAR(kendall(xt, yt).value, 0.9194744451420719, 1e-12);
  EXPECT_NEAR(kendall(xt, yt).p, 3.3235405838882814e-05, 1e-15);
  EXPECT_NEAR(kendall(xt, yt, Alternative::two_sided).p, 6.647081167776563e-05, 1e-15);
}

TEST(Correlation, ConstantInputs) {
  const Vec c{3, 3, 3, 3};
  const auto both = correlate(c, c);
  EXPECT_EQ(both.rho, 1.0);
  EXPECT_EQ(both.tau, 1.0);
  EXPECT_EQ(both.p_rho, 1.0);
  const auto one = correlate(c, identity(4));
  EXPECT_EQ(one.rho, 0.0);
  EXPECT_EQ(one.tau, 0.0);
  EXPECT_EQ(one.p_tau, 1.0);
}

TEST(Correlation, RejectsBadInputs) {
  EXPECT_THROW(correlate(Vec{1, 2}, Vec{1, 2}), ValidationError);
  EXPECT_THROW(correlate(Vec{1, 2, 3}, Vec{1, 2}), ValidationError);
}
