#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "dragon/decoder.h"
#include "dragon/random.h"
#include "dragon/retrieval.h"

namespace dragon {
namespace {

std::vector<std::uint32_t> Ids(const std::vector<ScoredDocument>& r) {
  std::vector<std::uint32_t> out;
  for (const auto& d : r) out.push_back(d.doc->id);
  return out;
}

TEST(Corpus, ParsesAndRejectsEmpty) {
  const auto c = Corpus::Parse("1 2 3\n\n4 5\n");
  ASSERT_EQ(c.docs().size(), 2u);
  EXPECT_EQ(c.docs()[1].tokens, (std::vector<TokenId>{4, 5}));
  EXPECT_EQ(c.MinVocabSize(), 6u);
  EXPECT_THROW(Retrieve(Corpus::Parse(""), std::vector<TokenId>{1}, 1, RetrievalHalf::kAll), std::invalid_argument);
}

TEST(Corpus, SyntheticRoundTripsThroughText) {
  SyntheticCorpusSpec spec;
  spec.seed = 11;
  const auto c = SyntheticCorpus(spec);
  std::ostringstream out;
  WriteCorpus(out, c);
  const auto back = Corpus::Parse(out.str());
  ASSERT_EQ(back.docs().size(), spec.docs);
  for (std::size_t i = 0; i < spec.docs; ++i) EXPECT_EQ(back.docs()[i].tokens, c.docs()[i].tokens);
  EXPECT_LE(c.MinVocabSize(), spec.vocab);
}

TEST(Retrieve, SingleDocument) {
  const auto c = Corpus::Parse("3 4 5\n");
  const std::vector<TokenId> q{9};
  EXPECT_EQ(Ids(Retrieve(c, q, 1, RetrievalHalf::kAll)), (std::vector<std::uint32_t>{0}));
}

TEST(Retrieve, ExactQueryRanksFirst) {
  const auto c = Corpus::Parse("1 2 3\n4 5 6 7\n8 9\n");
  const std::vector<TokenId> q{4, 5, 6, 7};
  EXPECT_EQ(Retrieve(c, q, 1, RetrievalHalf::kAll).front().doc->id, 1u);
}

TEST(Retrieve, HalvesSplitTheRanking) {
  // Overlap with the query 0..4: doc0=3, doc1=5, doc2=2, doc3=4.
  const auto c = Corpus::Parse("0 1 2 20\n0 1 2 3 4\n0 1 21\n0 1 2 3 22\n");
  const std::vector<TokenId> q{0, 1, 2, 3, 4};
  EXPECT_EQ(Ids(Retrieve(c, q, 2, RetrievalHalf::kFirst)), (std::vector<std::uint32_t>{1, 3}));
  EXPECT_EQ(Ids(Retrieve(c, q, 2, RetrievalHalf::kSecond)), (std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(UnigramOverlap(q, c.docs()[3].tokens), 4u);
}

TEST(ToyRelevance, FloorWithoutOverlap) {
  const std::vector<TokenId> w{1, 2};
  const std::vector<TokenId> d{3, 4};
  EXPECT_EQ(ToyRelevance(w, d), kRelevanceFloor);
  const std::vector<TokenId> d2{2, 5};
  EXPECT_NEAR(ToyRelevance(w, d2), std::log(2.0), 1e-15);
}

DecoderState StateFor(const std::string& corpus_text, std::vector<TokenId> prompt, std::size_t vocab, std::size_t k) {
  static std::vector<Corpus> keep;
  keep.push_back(Corpus::Parse(corpus_text));
  const auto hits = Retrieve(keep.back(), prompt, k, RetrievalHalf::kAll);
  return MakeDecoderState(Vocab(vocab), std::move(prompt), hits, 1, 64, 16);
}

TEST(Decoder, OneHotConditional) {
  auto st = StateFor("7 7 7\n", {7}, 10, 1);
  const auto d = DecodeStep(st, 0.3);
  EXPECT_EQ(d.token, 7u);
  EXPECT_EQ(d.dist, LogDist::OneHot(Vocab(10), 7));
}

TEST(Decoder, EqualScoreMixtureAndInverseCdf) {
  auto st = StateFor("0 0\n1 1\n", {2}, 3, 2);
  const auto d = DecodeStep(st, 0.25);
  EXPECT_NEAR(d.dist.Prob(0), 0.5, 1e-15);
  EXPECT_NEAR(d.dist.Prob(1), 0.5, 1e-15);
  EXPECT_EQ(d.token, 0u);
  EXPECT_NEAR(d.h.hlog, std::log(2.0) + kRelevanceFloor, 1e-12);
}

TEST(Decoder, Deterministic) {
  SyntheticCorpusSpec spec;
  spec.seed = 5;
  const auto c = SyntheticCorpus(spec);
  const std::vector<TokenId> prompt(c.docs()[0].tokens.begin(), c.docs()[0].tokens.begin() + 8);
  const auto hits = Retrieve(c, prompt, 3, RetrievalHalf::kAll);
  auto a = MakeDecoderState(Vocab(64), prompt, hits, 9, 64, 16);
  auto b = MakeDecoderState(Vocab(64), prompt, hits, 9, 64, 16);
  for (int i = 0; i < 10; ++i) {
    auto da = DecodeStep(a, UniformAt(1, 2, i));
    auto db = DecodeStep(b, UniformAt(1, 2, i));
    da.decode_ms = db.decode_ms = 0.0;
    EXPECT_EQ(da, db);
  }
}

TEST(Decoder, ContextExhausted) {
  const auto c = Corpus::Parse("1 2\n");
  const std::vector<TokenId> p{1};
  const auto hits = Retrieve(c, p, 1, RetrievalHalf::kAll);
  auto st = MakeDecoderState(Vocab(4), p, hits, 0, 2, 8);
  DecodeStep(st, 0.5);
  EXPECT_THROW(DecodeStep(st, 0.5), ContextExhausted);
}

TEST(Rollback, Truncates) {
  SyntheticCorpusSpec spec;
  spec.seed = 2;
  const auto c = SyntheticCorpus(spec);
  const std::vector<TokenId> prompt(c.docs()[1].tokens.begin(), c.docs()[1].tokens.begin() + 3);
  const auto hits = Retrieve(c, prompt, 2, RetrievalHalf::kAll);
  auto st = MakeDecoderState(Vocab(64), prompt, hits, 4, 64, 16);
  for (int i = 0; i < 7; ++i) DecodeStep(st, UniformAt(3, 3, i));
  ASSERT_EQ(st.context.size(), 10u);
  const std::vector<TokenId> keep(st.context.begin(), st.context.begin() + 7);
  Rollback(st, keep, 5);
  EXPECT_EQ(st.context.size(), 8u);
  EXPECT_EQ(st.context.back(), 5u);

  const std::vector<TokenId> full = st.context;
  Rollback(st, full, 6);
  EXPECT_EQ(st.context.size(), full.size() + 1);

  const std::vector<TokenId> bogus{63, 63, 63};
  EXPECT_THROW(Rollback(st, bogus, 1), std::invalid_argument);
  std::vector<TokenId> too_long = st.context;
  too_long.push_back(1);
  EXPECT_THROW(Rollback(st, too_long, 1), std::invalid_argument);
}

TEST(Rollback, DecodeMatchesFreshState) {
  SyntheticCorpusSpec spec;
  spec.seed = 8;
  const auto c = SyntheticCorpus(spec);
  const std::vector<TokenId> prompt(c.docs()[2].tokens.begin(), c.docs()[2].tokens.begin() + 5);
  const auto hits = Retrieve(c, prompt, 3, RetrievalHalf::kAll);
  auto st = MakeDecoderState(Vocab(64), prompt, hits, 6, 64, 16);
  for (int i = 0; i < 6; ++i) DecodeStep(st, UniformAt(4, 4, i));
  std::vector<TokenId> prefix(st.context.begin(), st.context.begin() + 8);
  Rollback(st, prefix, 17);
  prefix.push_back(17);
  auto fresh = MakeDecoderState(Vocab(64), prompt, hits, 6, 64, 16);
  fresh.context = prefix;
  for (int i = 0; i < 5; ++i) {
    auto a = DecodeStep(st, UniformAt(5, 5, i));
    auto b = DecodeStep(fresh, UniformAt(5, 5, i));
    a.decode_ms = b.decode_ms = 0.0;
    EXPECT_EQ(a, b);
  }
}

TEST(Decoder, WireTopPDistributionMatchesEncoding) {
  SyntheticCorpusSpec spec;
  spec.seed = 3;
  const auto c = SyntheticCorpus(spec);
  const std::vector<TokenId> prompt(c.docs()[0].tokens.begin(), c.docs()[0].tokens.begin() + 8);
  const auto hits = Retrieve(c, prompt, 2, RetrievalHalf::kAll);
  auto st = MakeDecoderState(Vocab(64), prompt, hits, 1, 64, 16);
  st.wire_top_p = 0.8;
  for (int i = 0; i < 10; ++i) {
    const auto d = DecodeStep(st, UniformAt(6, 6, i));
    ASSERT_TRUE(d.wire.has_value());
    EXPECT_EQ(TopPDecode(*d.wire), d.dist);
    EXPECT_GT(d.dist.Prob(d.token), 0.0);
  }
}

}  // namespace
}  // namespace dragon
