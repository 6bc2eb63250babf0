#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dragon/dist.h"
#include "dragon/random.h"
#include "dragon/topp.h"

namespace dragon {
namespace {

LogDist P(std::vector<double> w) { return LogDist::FromWeights(w); }

TEST(EtaLogWeights, SymmetricScoresSplitEvenly) {
  const auto e = EtaLogWeights({0.0}, {0.0});
  EXPECT_NEAR(e.l, std::log(0.5), 1e-15);
  EXPECT_NEAR(e.r, std::log(0.5), 1e-15);
}

TEST(EtaLogWeights, LargeGapDoesNotOverflow) {
  const auto e = EtaLogWeights({700.0}, {0.0});
  EXPECT_TRUE(std::isfinite(e.l));
  EXPECT_TRUE(std::isfinite(e.r));
  EXPECT_NEAR(e.l, 0.0, 1e-12);
  EXPECT_NEAR(e.r, -700.0, 1e-9);
}

TEST(EtaLogWeights, HandSoftmax) {
  const auto e = EtaLogWeights({std::log(3.0)}, {0.0});
  EXPECT_NEAR(e.l, std::log(0.75), 1e-14);
  EXPECT_NEAR(e.r, std::log(0.25), 1e-14);
}

TEST(EtaLogWeights, RejectsNonFinite) {
  EXPECT_THROW(EtaLogWeights({std::nan("")}, {0.0}), std::domain_error);
  EXPECT_THROW(EtaLogWeights({0.0}, {std::numeric_limits<double>::infinity()}), std::domain_error);
}

TEST(InterpolateTarget, IdenticalInputsAreFixed) {
  const auto p = P({0.1, 0.6, 0.3});
  const auto t = InterpolateTarget(p, p, CorrectedWeight{1.3}, CorrectedWeight{-0.4});
  EXPECT_LT(TotalVariation(t, p), 1e-14);
}

TEST(InterpolateTarget, WorkedExample) {
  const auto t = InterpolateTarget(P({0.5, 0.3, 0.2}), P({0.2, 0.5, 0.3}), CorrectedWeight{0.0}, CorrectedWeight{0.0});
  EXPECT_NEAR(t.Prob(0), 0.35, 1e-14);
  EXPECT_NEAR(t.Prob(1), 0.40, 1e-14);
  EXPECT_NEAR(t.Prob(2), 0.25, 1e-14);
}

TEST(InterpolateTarget, DominantWeightLimit) {
  const auto pl = P({0.5, 0.3, 0.2});
  const auto t = InterpolateTarget(pl, P({0.2, 0.5, 0.3}), CorrectedWeight{50.0}, CorrectedWeight{0.0});
  EXPECT_LT(TotalVariation(t, pl), 1e-12);
}

TEST(InterpolateTarget, VocabMismatch) {
  EXPECT_THROW(InterpolateTarget(P({0.5, 0.5}), P({0.2, 0.3, 0.5}), CorrectedWeight{}, CorrectedWeight{}),
               VocabMismatch);
}

TEST(InterpolateTarget, HandlesZeroEntries) {
  const auto t = InterpolateTarget(P({1.0, 0.0, 0.0}), P({0.0, 0.0, 1.0}), CorrectedWeight{}, CorrectedWeight{});
  EXPECT_DOUBLE_EQ(t.Prob(1), 0.0);
  EXPECT_NEAR(t.Prob(0) + t.Prob(2), 1.0, 1e-15);
}

TEST(InterpolateTarget, SumsToOneOnRandomInputs) {
  for (std::uint64_t i = 0; i < 200; ++i) {
    const std::size_t v = 2 + static_cast<std::size_t>(UniformAt(1, 2, i) * 30);
    std::vector<double> a(v), b(v);
    for (std::size_t x = 0; x < v; ++x) {
      a[x] = UniformAt(i, 3, x);
      b[x] = UniformAt(i, 4, x);
    }
    const auto t = InterpolateTarget(P(a), P(b), CorrectedWeight{UniformAt(i, 5, 0) * 40 - 20},
                                     CorrectedWeight{UniformAt(i, 6, 0) * 40 - 20});
    double s = 0.0;
    for (double q : t.Probs()) s += q;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(LkDivergence, Extremes) {
  const auto p = P({0.2, 0.8});
  EXPECT_DOUBLE_EQ(LkDivergence(p, p), 0.0);
  EXPECT_NEAR(LkDivergence(P({1.0, 0.0}), P({0.0, 1.0})), 1.0, 1e-15);
}

TEST(LkDivergence, HandSum) {
  EXPECT_NEAR(LkDivergence(P({0.5, 0.3, 0.2}), P({0.2, 0.5, 0.3})), 0.3, 1e-14);
}

TEST(LkDivergence, VocabMismatch) { EXPECT_THROW(LkDivergence(P({0.5, 0.5}), P({1, 1, 1})), VocabMismatch); }

TEST(LogDist, RejectsBadInput) {
  EXPECT_THROW(LogDist::FromWeights(std::vector<double>{0.0, 0.0}), std::domain_error);
  EXPECT_THROW(LogDist::FromWeights(std::vector<double>{1.0, -1.0}), std::domain_error);
  EXPECT_THROW(LogDist::FromLogProbs({std::log(0.9), std::log(0.9)}), std::domain_error);
  EXPECT_THROW(Vocab(1), std::invalid_argument);
}

TEST(SampleInverseCdf, PicksByCumulativeMass) {
  const auto p = P({0.5, 0.0, 0.5});
  EXPECT_EQ(SampleInverseCdf(p, 0.0), 0u);
  EXPECT_EQ(SampleInverseCdf(p, 0.49), 0u);
  EXPECT_EQ(SampleInverseCdf(p, 0.51), 2u);
  EXPECT_EQ(SampleInverseCdf(p, 0.999999), 2u);
}

TEST(TopP, WorkedExample) {
  const auto c = TopPEncode(P({0.5, 0.3, 0.15, 0.05}), 0.8);
  ASSERT_EQ(c.entries.size(), 2u);
  EXPECT_EQ(c.entries[0].token, 0u);
  EXPECT_EQ(c.entries[1].token, 1u);
  const auto d = TopPDecode(c);
  EXPECT_NEAR(d.Prob(0), 0.625, 1e-3);
  EXPECT_NEAR(d.Prob(1), 0.375, 1e-3);
  EXPECT_EQ(d.Prob(2), 0.0);
  EXPECT_EQ(d.Prob(3), 0.0);
}

TEST(TopP, FullThresholdRoundTrip) {
  const auto p = P({0.1, 0.0, 0.25, 0.65});
  const auto c = TopPEncode(p, 1.0);
  EXPECT_EQ(c.entries.size(), 3u);
  const auto d = TopPDecode(c);
  for (TokenId x = 0; x < 4; ++x) EXPECT_NEAR(d.Prob(x), p.Prob(x), 1e-3);
}

TEST(TopP, OneHotStaysOneHot) {
  const auto p = LogDist::OneHot(Vocab(5), 3);
  for (double thr : {0.1, 0.5, 1.0}) {
    const auto c = TopPEncode(p, thr);
    ASSERT_EQ(c.entries.size(), 1u);
    EXPECT_EQ(TopPDecode(c), p);
  }
}

TEST(TopP, SizeNonDecreasingInThreshold) {
  for (std::uint64_t i = 0; i < 50; ++i) {
    std::vector<double> w(40);
    for (std::size_t x = 0; x < w.size(); ++x) w[x] = UniformAt(i, 9, x);
    const auto p = P(w);
    std::size_t prev = 0;
    for (int k = 1; k <= 20; ++k) {
      const auto n = EncodedSize(TopPEncode(p, k / 20.0));
      EXPECT_GE(n, prev);
      prev = n;
    }
  }
}

TEST(TopP, InvariantsHold) {
  std::vector<double> w(100);
  for (std::size_t x = 0; x < w.size(); ++x) w[x] = UniformAt(7, 7, x);
  const auto c = TopPEncode(P(w), 0.9);
  EXPECT_NO_THROW(Validate(c));
  double s = 0.0;
  for (std::size_t i = 0; i < c.entries.size(); ++i) {
    if (i > 0) {
      EXPECT_LT(c.entries[i - 1].token, c.entries[i].token);
    }
    EXPECT_GT(c.entries[i].value(), 0.0f);
    s += c.entries[i].value();
  }
  EXPECT_LE(s, 1.0 + std::ldexp(1.0, -9));
}

TEST(TopP, ValidateRejectsBadForms) {
  CompressedDist c{4, {{2, FloatToHalfBits(0.5f)}, {1, FloatToHalfBits(0.5f)}}};
  EXPECT_THROW(Validate(c), InvalidCompressedDist);
  c = {4, {{7, FloatToHalfBits(1.0f)}}};
  EXPECT_THROW(Validate(c), InvalidCompressedDist);
  c = {4, {}};
  EXPECT_THROW(Validate(c), InvalidCompressedDist);
  EXPECT_THROW(TopPEncode(P({0.5, 0.5}), 0.0), std::invalid_argument);
}

TEST(Half, RoundTripsExactValues) {
  for (float f : {0.0f, 0.5f, 0.25f, 1.0f, 0.125f}) EXPECT_EQ(HalfBitsToFloat(FloatToHalfBits(f)), f);
}

}  // namespace
}  // namespace dragon
