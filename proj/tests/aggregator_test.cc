#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "dragon/aggregator.h"
#include "dragon/random.h"

namespace dragon {
namespace {

LogDist P(std::vector<double> w) { return LogDist::FromWeights(w); }

DraftRecord Draft(LogDist p, TokenId x, double h, Side side, std::uint32_t step = 0) {
  DraftRecord d;
  d.dist = std::move(p);
  d.token = x;
  d.h = {h};
  d.side = side;
  d.step = step;
  return d;
}

TEST(SpeculativeSample, EqualDistributionsKeep) {
  const auto p = P({0.2, 0.3, 0.5});
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(SpeculativeSample(1, p, p, 1.0, UniformAt(1, 1, i), UniformAt(1, 2, i)), 1u);
  }
}

TEST(SpeculativeSample, ZeroEtaKeeps) {
  const auto a = P({0.9, 0.1});
  const auto b = P({0.1, 0.9});
  for (double u : {0.0, 0.3, 0.999}) EXPECT_EQ(SpeculativeSample(0, a, b, 0.0, u, 0.5), 0u);
}

TEST(SpeculativeSample, HandRejectionProbability) {
  const auto a = P({0.9, 0.1});
  const auto b = P({0.1, 0.9});
  const double reject = 1.0 - 1.0 / 9.0;
  EXPECT_EQ(SpeculativeSample(0, a, b, 1.0, reject - 1e-9, 0.0), 1u);
  EXPECT_EQ(SpeculativeSample(0, a, b, 1.0, reject - 1e-9, 0.999), 1u);
  EXPECT_EQ(SpeculativeSample(0, a, b, 1.0, reject + 1e-9, 0.0), 0u);
  int rejected = 0;
  constexpr int kN = 200000;
  for (int i = 0; i < kN; ++i) rejected += SpeculativeSample(0, a, b, 1.0, UniformAt(3, 1, i), UniformAt(3, 2, i)) == 1u;
  EXPECT_NEAR(rejected / double(kN), reject, 0.005);
}

TEST(Aggregate, IdenticalDraftsAccepted) {
  const auto p = P({0.25, 0.5, 0.25});
  for (std::uint32_t s = 0; s < 50; ++s) {
    const auto o = Aggregate(Draft(p, 2, 0.3, Side::kDevice, s), Draft(p, 2, -1.0, Side::kCloud, s), DrawsForStep(4, s));
    EXPECT_EQ(o.target, 2u);
    EXPECT_TRUE(o.accept_l);
    EXPECT_TRUE(o.accept_r);
    EXPECT_EQ(o.step, s);
  }
}

TEST(Aggregate, DisjointSupportsDominantDevice) {
  const auto pl = P({0.6, 0.4, 0.0, 0.0});
  const auto pr = P({0.0, 0.0, 0.5, 0.5});
  const double er = std::exp(EtaLogWeights({60.0}, {0.0}).r);
  for (std::uint32_t s = 0; s < 200; ++s) {
    const auto draws = DrawsForStep(8, s);
    const TokenId xl = SampleInverseCdf(pl, UniformAt(8, 1, s));
    const TokenId xr = SampleInverseCdf(pr, UniformAt(8, 2, s));
    // Device draft kept, cloud draft always replaced by a fresh draw from p_l.
    EXPECT_EQ(SpeculativeSample(xl, pl, pr, er, draws.reject_l, draws.resample_l), xl);
    const TokenId yr = SpeculativeSample(xr, pr, pl, 1.0 - er, draws.reject_r, draws.resample_r);
    EXPECT_GT(pl.Prob(yr), 0.0);
    const auto o = Aggregate(Draft(pl, xl, 60.0, Side::kDevice, s), Draft(pr, xr, 0.0, Side::kCloud, s), draws);
    EXPECT_FALSE(o.accept_r);
    EXPECT_GT(pl.Prob(o.target), 0.0);
    if (draws.select <= kDefaultGamma) {
      EXPECT_EQ(o.target, xl);
    } else {
      EXPECT_EQ(o.target, yr);
    }
  }
}

TEST(Aggregate, StepMismatchIsProtocolError) {
  const auto p = P({0.5, 0.5});
  EXPECT_THROW(Aggregate(Draft(p, 0, 0, Side::kDevice, 1), Draft(p, 0, 0, Side::kCloud, 2), {}), ProtocolError);
}

TEST(Aggregate, TargetLawMatchesInterpolation) {
  const auto pl = P({0.5, 0.3, 0.2});
  const auto pr = P({0.2, 0.5, 0.3});
  std::array<int, 3> counts{};
  constexpr int kN = 1000000;
  for (int i = 0; i < kN; ++i) {
    const TokenId xl = SampleInverseCdf(pl, UniformAt(21, 1, i));
    const TokenId xr = SampleInverseCdf(pr, UniformAt(21, 2, i));
    const auto o = Aggregate(Draft(pl, xl, 0.0, Side::kDevice, i), Draft(pr, xr, 0.0, Side::kCloud, i),
                             DrawsForStep(21, static_cast<std::uint32_t>(i)));
    ++counts[o.target];
  }
  const double expected[] = {0.35, 0.40, 0.25};
  for (int x = 0; x < 3; ++x) {
    const double sigma = std::sqrt(expected[x] * (1 - expected[x]) / kN);
    EXPECT_NEAR(counts[x] / double(kN), expected[x], 3 * sigma) << "token " << x;
  }
}

TEST(ExpectedAcceptance, UniformPair) {
  const auto p = P({1, 1});
  for (double er : {0.0, 0.3, 1.0}) EXPECT_NEAR(ExpectedAcceptance(p, p, er, 0.5), 0.75, 1e-14);
}

TEST(ExpectedAcceptance, DisjointGammaTermIsHalfEtaL) {
  const auto pl = P({0.5, 0.5, 0, 0});
  const auto pr = P({0, 0, 0.5, 0.5});
  const double er = 0.3;
  // Isolate the gamma-weighted term.
  const double a1 = ExpectedAcceptance(pl, pr, er, 1.0);
  EXPECT_NEAR(0.5 * a1, 0.5 * (1 - er), 1e-15);
  // The full value also carries 0.5 * eta_l * sum p_l^2.
  EXPECT_NEAR(ExpectedAcceptance(pl, pr, er, 0.5), 0.5 * (1 - er) * (1 + 0.5), 1e-14);
}

TEST(ExpectedAcceptance, FullDeviceWeightIdenticalIsOne) {
  const auto p = P({0.1, 0.2, 0.7});
  EXPECT_NEAR(ExpectedAcceptance(p, p, 0.4, 1.0), 1.0, 1e-15);
}

TEST(ExpectedAcceptance, ExtremesOverPairs) {
  // Same eta: identical pairs beat any other pair, disjoint pairs are the floor.
  for (std::uint64_t i = 0; i < 300; ++i) {
    std::vector<double> a(6), b(6);
    for (int x = 0; x < 6; ++x) {
      a[x] = UniformAt(i, 1, x);
      b[x] = UniformAt(i, 2, x);
    }
    const auto pl = P(a);
    const auto pr = P(b);
    const double er = UniformAt(i, 3, 0);
    const double mid = ExpectedAcceptance(pl, pr, er);
    EXPECT_LE(mid, ExpectedAcceptance(pl, pl, er) + 1e-12);
    std::vector<double> shifted(12, 0.0);
    std::vector<double> left(12, 0.0);
    for (int x = 0; x < 6; ++x) {
      left[x] = a[x];
      shifted[x + 6] = b[x];
    }
    EXPECT_GE(mid + 1e-12, ExpectedAcceptance(P(left), P(shifted), er));
  }
}

TEST(ExpectedAcceptance, StrictlyIncreasingInGamma) {
  for (std::uint64_t i = 0; i < 200; ++i) {
    std::vector<double> a(5), b(5);
    for (int x = 0; x < 5; ++x) {
      a[x] = 0.05 + UniformAt(i, 4, x);
      b[x] = UniformAt(i, 5, x) < 0.3 ? 0.0 : UniformAt(i, 6, x);
    }
    b[0] += 0.01;
    const auto pl = P(a);
    const auto pr = P(b);
    const double er = UniformAt(i, 7, 0);
    double prev = -1;
    for (int g = 0; g <= 10; ++g) {
      const double v = ExpectedAcceptance(pl, pr, er, g / 10.0);
      EXPECT_GT(v, prev);
      prev = v;
    }
  }
}

TEST(ExpectedAcceptance, PointMassDeviceIsFlatInGamma) {
  const auto pl = LogDist::OneHot(Vocab(3), 1);
  const auto pr = P({0.2, 0.3, 0.5});
  EXPECT_NEAR(ExpectedAcceptance(pl, pr, 0.6, 0.0), ExpectedAcceptance(pl, pr, 0.6, 1.0), 1e-15);
}

TEST(ExpectedAcceptance, MatchesMonteCarlo) {
  const auto pl = P({0.4, 0.1, 0.3, 0.2, 0.0});
  const auto pr = P({0.1, 0.1, 0.1, 0.2, 0.5});
  const double hl = 0.7;
  const double hr = -0.2;
  const double er = std::exp(EtaLogWeights({hl}, {hr}).r);
  constexpr int kN = 400000;
  int acc_l = 0;
  for (int i = 0; i < kN; ++i) {
    const TokenId xl = SampleInverseCdf(pl, UniformAt(31, 1, i));
    const TokenId xr = SampleInverseCdf(pr, UniformAt(31, 2, i));
    acc_l += Aggregate(Draft(pl, xl, hl, Side::kDevice, i), Draft(pr, xr, hr, Side::kCloud, i),
                       DrawsForStep(31, static_cast<std::uint32_t>(i)))
                 .accept_l;
  }
  EXPECT_NEAR(acc_l / double(kN), ExpectedAcceptance(pl, pr, er), 0.005);
}

TEST(ExpectedAcceptance, RejectsBadWeights) {
  const auto p = P({1, 1});
  EXPECT_THROW(ExpectedAcceptance(p, p, 1.5), std::domain_error);
  EXPECT_THROW(ExpectedAcceptance(p, p, 0.5, -0.1), std::domain_error);
}

}  // namespace
}  // namespace dragon
