#include <gtest/gtest.h>

#include <chrono>
#include <sstream>
#include <thread>

#include "dragon/random.h"
#include "dragon/runtime/loopback.h"
#include "dragon/runtime/node.h"
#include "dragon/runtime/session.h"

namespace dragon::runtime {
namespace {

struct Fixture {
  std::shared_ptr<const Corpus> corpus;
  SessionConfig session;
};

Fixture Make(std::uint64_t seed, std::size_t tokens) {
  SyntheticCorpusSpec spec;
  spec.seed = seed;
  Fixture f;
  f.corpus = std::make_shared<const Corpus>(SyntheticCorpus(spec));
  const auto& d = f.corpus->docs()[seed % spec.docs].tokens;
  f.session.prompt.assign(d.begin(), d.begin() + 8);
  f.session.vocab_size = spec.vocab;
  f.session.max_new_tokens = tokens;
  f.session.seed = seed;
  return f;
}

NodeConfig Config(const Fixture& f, Side role, RetrievalHalf half, NodeOptions opt = {}) {
  return {role, f.session, {f.corpus, half}, std::move(opt)};
}

PairResult Pair(const Fixture& f, NodeOptions opt = {}, LinkOptions link = {}) {
  return RunLoopbackPair(Config(f, Side::kDevice, DefaultHalf(Side::kDevice), opt),
                         Config(f, Side::kCloud, DefaultHalf(Side::kCloud), opt), link);
}

std::vector<AggregationOutcome> Oracle(const Fixture& f) {
  auto log = RunSequential(f.session, {f.corpus, DefaultHalf(Side::kDevice)}, {f.corpus, DefaultHalf(Side::kCloud)}).log;
  for (auto& o : log) o.resampled_from = ResampledFrom::kNone;
  return log;
}

void ExpectMatches(const PairResult& r, const std::vector<AggregationOutcome>& oracle) {
  ASSERT_TRUE(r.device.completed) << r.device.error;
  ASSERT_TRUE(r.cloud.completed) << r.cloud.error;
  EXPECT_EQ(r.device.log, r.cloud.log);
  EXPECT_EQ(r.device.log, oracle);
  for (std::size_t i = 0; i < r.device.log.size(); ++i) EXPECT_EQ(r.device.log[i].step, i);
}

TEST(Session, WireRoundTripKeepsDraft) {
  const auto f = Make(3, 5);
  auto st = BuildDecoderState(f.session, {f.corpus, RetrievalHalf::kFirst});
  const auto d = DecodeStep(st, 0.4, Side::kCloud);
  ASSERT_TRUE(d.wire);
  const auto back = FromWire(ToWire(d), Side::kCloud);
  EXPECT_EQ(back.token, d.token);
  EXPECT_EQ(back.dist, d.dist);
  EXPECT_EQ(back.h.hlog, d.h.hlog);
  auto bad = ToWire(d);
  bad.token = bad.dist.vocab_size - 1;
  bool outside = true;
  for (const auto& e : bad.dist.entries) outside = outside && e.token != bad.token;
  if (outside) {
    EXPECT_THROW(FromWire(bad, Side::kCloud), ProtocolError);
  }
}

TEST(Session, ValidateRejectsBadConfig) {
  auto f = Make(1, 5);
  SessionConfig s = f.session;
  s.prompt.clear();
  EXPECT_ANY_THROW(Validate(s));
  s = f.session;
  s.top_p = 0.0;
  EXPECT_ANY_THROW(Validate(s));
  s = f.session;
  s.prompt.push_back(static_cast<TokenId>(s.vocab_size));
  EXPECT_ANY_THROW(Validate(s));
}

TEST(Runtime, ZeroTokens) {
  const auto f = Make(2, 0);
  const auto r = Pair(f);
  ASSERT_TRUE(r.device.completed) << r.device.error;
  ASSERT_TRUE(r.cloud.completed) << r.cloud.error;
  EXPECT_TRUE(r.device.log.empty());
  EXPECT_TRUE(r.cloud.log.empty());
  EXPECT_GE(r.device.ttft_ms, 0.0);
}

TEST(Runtime, MatchesSequentialReference) {
  for (std::uint64_t seed : {1, 4, 9}) {
    const auto f = Make(seed, 20);
    ExpectMatches(Pair(f), Oracle(f));
  }
}

TEST(Runtime, IdenticalRetrievalNeverRollsBack) {
  const auto f = Make(5, 30);
  const auto r = RunLoopbackPair(Config(f, Side::kDevice, RetrievalHalf::kAll), Config(f, Side::kCloud, RetrievalHalf::kAll));
  ASSERT_TRUE(r.device.completed) << r.device.error;
  ASSERT_EQ(r.device.log.size(), 30u);
  for (const auto& o : r.device.log) {
    EXPECT_TRUE(o.accept_l);
    EXPECT_TRUE(o.accept_r);
  }
  EXPECT_EQ(r.device.rollbacks, 0u);
  EXPECT_EQ(r.cloud.rollbacks, 0u);
}

TEST(Runtime, StaticCloudMatchesStaticDevice) {
  const auto f = Make(6, 25);
  NodeOptions cloud;
  cloud.policy = AggregatorPolicy::kCloud;
  const auto a = Pair(f);
  const auto b = Pair(f, cloud);
  ExpectMatches(b, Oracle(f));
  EXPECT_EQ(a.device.log, b.device.log);
  EXPECT_EQ(b.device.metrics.front().aggregator, Side::kCloud);
}

TEST(Runtime, SwitchAndImmediateSwitchBack) {
  const auto f = Make(7, 25);
  NodeOptions opt;
  opt.switch_after = {3, 4, 10};
  const auto r = Pair(f, opt);
  ExpectMatches(r, Oracle(f));
  EXPECT_EQ(r.device.switches, 3u);
  EXPECT_EQ(r.device.metrics[4].aggregator, Side::kCloud);
  EXPECT_EQ(r.device.metrics[5].aggregator, Side::kDevice);
  EXPECT_EQ(r.device.metrics[11].aggregator, Side::kCloud);
}

TEST(Runtime, SwitchWithQueuedRemoteDrafts) {
  // A slow cloud link and a fast device decoder leave drafts in flight at each hand-off.
  const auto f = Make(8, 30);
  NodeOptions opt;
  opt.switch_after = {5, 12, 20};
  opt.decode_delay_ms = 1.0;
  LinkOptions link;
  link.cloud_to_device = MakeDelay(15.0);
  link.device_to_cloud = MakeDelay(15.0);
  ExpectMatches(Pair(f, opt, link), Oracle(f));
}

TEST(Runtime, AutoPolicyKeepsTheLog) {
  const auto f = Make(10, 30);
  NodeConfig d = Config(f, Side::kDevice, DefaultHalf(Side::kDevice));
  NodeConfig c = Config(f, Side::kCloud, DefaultHalf(Side::kCloud));
  d.options.policy = c.options.policy = AggregatorPolicy::kAuto;
  d.options.decode_delay_ms = 6.0;
  c.options.decode_delay_ms = 1.0;
  LinkOptions link;
  link.device_to_cloud = MakeDelay(3.0);
  link.cloud_to_device = MakeDelay(3.0);
  const auto r = RunLoopbackPair(d, c, link);
  ExpectMatches(r, Oracle(f));
}

TEST(Runtime, VanillaMatchesReference) {
  const auto f = Make(11, 15);
  NodeOptions opt;
  opt.vanilla = true;
  const auto r = Pair(f, opt);
  ExpectMatches(r, Oracle(f));
  EXPECT_EQ(r.device.discarded_drafts, 0u);
}

TEST(Runtime, BlockCodecMatchesReference) {
  const auto f = Make(12, 20);
  LinkOptions link;
  link.codec = transport::Codec::kBlock;
  ExpectMatches(Pair(f, {}, link), Oracle(f));
}

TEST(Runtime, PeerDisconnectAbortsWithPartialLog) {
  const auto f = Make(13, 50);
  auto [mine, theirs] = transport::SocketPair();
  std::thread peer([s = std::move(theirs)]() mutable {
    transport::Channel ch(std::move(s));
    (void)ch.Receive();
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    ch.Abort();
  });
  transport::Channel ch(std::move(mine));
  NodeConfig cfg = Config(f, Side::kDevice, DefaultHalf(Side::kDevice));
  cfg.options.shutdown_timeout_ms = 500;
  const auto r = RunNode(cfg, ch);
  peer.join();
  EXPECT_FALSE(r.completed);
  EXPECT_FALSE(r.error.empty());
  EXPECT_LT(r.log.size(), 50u);
}

TEST(Runtime, OutputFormats) {
  NodeResult r;
  r.log = {{5, true, false, 0, ResampledFrom::kNone}};
  r.metrics = {{0, 5, true, false, 1.5, Side::kDevice}};
  std::ostringstream csv;
  WriteMetricsCsv(csv, r);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "step,token,accept_l,accept_r,latency_ms");
  std::ostringstream log;
  WriteTargetLog(log, r.log);
  EXPECT_EQ(log.str(), "0 5 1 0\n");
}

}  // namespace
}  // namespace dragon::runtime
