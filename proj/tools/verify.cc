#include "verify.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "dragon/aggregator.h"
#include "dragon/dist.h"
#include "dragon/random.h"
#include "dragon/runtime/loopback.h"
#include "dragon/runtime/session.h"
#include "dragon/scheduler.h"
#include "dragon/sim/simulator.h"
#include "dragon/transport/wire.h"

namespace dragon::tools {

bool SuiteReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckLine& c) { return c.pass; });
}

void SuiteReport::Add(std::string name, bool pass, std::string detail) {
  checks.push_back({std::move(name), pass, std::move(detail)});
}

void PrintReport(std::ostream& out, const SuiteReport& report) {
  for (const auto& c : report.checks) {
    out << (c.pass ? "PASS " : "FAIL ") << report.suite << '/' << c.name << ": " << c.detail << '\n';
  }
}

namespace {

constexpr std::uint64_t kSuiteStream = 0x7665726966ULL;

struct Triple {
  LogDist p_l = LogDist::Uniform(Vocab(2));
  LogDist p_r = LogDist::Uniform(Vocab(2));
  CorrectedWeight h_l;
  CorrectedWeight h_r;
};

// Random instance with vocab 2..8 and some zero entries.
Triple RandomTriple(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t s = HashCombine(HashCombine(seed, kSuiteStream), index);
  std::uint64_t k = 0;
  auto u = [&] { return UniformAt(s, 0, k++); };
  const std::size_t v = 2 + static_cast<std::size_t>(u() * 7.0);
  auto weights = [&] {
    std::vector<double> w(v);
    for (auto& x : w) x = u() < 0.2 ? 0.0 : u();
    if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) w[0] = 1.0;
    return LogDist::FromWeights(w);
  };
  Triple t;
  t.p_l = weights();
  t.p_r = weights();
  t.h_l = {u() * 6.0 - 3.0};
  t.h_r = {u() * 6.0 - 3.0};
  return t;
}

bool IsPointMass(const LogDist& p) {
  std::size_t nz = 0;
  for (std::size_t x = 0; x < p.size(); ++x) nz += p.Prob(x) > 0.0 ? 1 : 0;
  return nz == 1;
}

struct MonteCarlo {
  std::vector<double> target_freq;
  double accept_l = 0.0;
  double accept_r = 0.0;
};

MonteCarlo RunMonteCarlo(const Triple& t, std::size_t trials, std::uint64_t seed, double gamma = kDefaultGamma) {
  DraftRecord l;
  DraftRecord r;
  l.dist = t.p_l;
  r.dist = t.p_r;
  l.h = t.h_l;
  r.h = t.h_r;
  r.side = Side::kCloud;
  MonteCarlo mc;
  mc.target_freq.assign(t.p_l.size(), 0.0);
  std::size_t acc_l = 0;
  std::size_t acc_r = 0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    l.token = SampleInverseCdf(t.p_l, UniformAt(seed, 10, i));
    r.token = SampleInverseCdf(t.p_r, UniformAt(seed, 11, i));
    const AggregationDraws d{UniformAt(seed, 12, i), UniformAt(seed, 13, i), UniformAt(seed, 14, i),
                             UniformAt(seed, 15, i), UniformAt(seed, 16, i)};
    const AggregationOutcome o = Aggregate(l, r, d, gamma);
    mc.target_freq[o.target] += 1.0;
    acc_l += o.accept_l ? 1 : 0;
    acc_r += o.accept_r ? 1 : 0;
  }
  for (auto& f : mc.target_freq) f /= static_cast<double>(trials);
  mc.accept_l = static_cast<double>(acc_l) / static_cast<double>(trials);
  mc.accept_r = static_cast<double>(acc_r) / static_cast<double>(trials);
  return mc;
}

double Eta(const Triple& t, Side side) {
  const LogEta e = EtaLogWeights(t.h_l, t.h_r);
  return std::exp(side == Side::kDevice ? e.l : e.r);
}

template <typename F>
SuiteReport Timed(const std::string& name, F&& body) {
  SuiteReport r;
  r.suite = name;
  const auto t0 = std::chrono::steady_clock::now();
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

SuiteReport VerifyAggregation(const VerifyOptions& opt) {
  return Timed("aggregation", [&](SuiteReport& rep) {
    double worst = 0.0;
    for (std::size_t i = 0; i < opt.instances; ++i) {
      const Triple t = RandomTriple(opt.seed, i);
      const MonteCarlo mc = RunMonteCarlo(t, opt.trials, HashCombine(opt.seed, i));
      const LogDist target = InterpolateTarget(t.p_l, t.p_r, t.h_l, t.h_r);
      double tv = 0.0;
      for (std::size_t x = 0; x < target.size(); ++x) tv += std::abs(mc.target_freq[x] - target.Prob(x));
      tv *= 0.5;
      worst = std::max(worst, tv);
      if (opt.csv) *opt.csv << "aggregation," << i << ",tv," << tv << '\n';
    }
    rep.Add("target_law", worst < 0.005,
            fmt::format("max TV over {} instances x {} trials = {:.5f} (< 0.005)", opt.instances, opt.trials, worst));
  });
}

SuiteReport VerifyAcceptance(const VerifyOptions& opt) {
  return Timed("acceptance", [&](SuiteReport& rep) {
    double worst = 0.0;
    for (std::size_t i = 0; i < opt.instances; ++i) {
      const Triple t = RandomTriple(opt.seed, i);
      const MonteCarlo mc = RunMonteCarlo(t, opt.trials, HashCombine(opt.seed, i + 1000));
      const double el = ExpectedAcceptance(t.p_l, t.p_r, Eta(t, Side::kCloud));
      const double er = ExpectedAcceptance(t.p_r, t.p_l, Eta(t, Side::kDevice));
      worst = std::max({worst, std::abs(mc.accept_l - el), std::abs(mc.accept_r - er)});
      if (opt.csv) *opt.csv << "acceptance," << i << ",err," << std::max(std::abs(mc.accept_l - el), std::abs(mc.accept_r - er)) << '\n';
    }
    rep.Add("empirical_vs_formula", worst <= 0.01,
            fmt::format("max |empirical - formula| over {} instances, both sides = {:.5f} (<= 0.01)", opt.instances, worst));

    // Identical distributions: the gamma term is gamma * (1 - eta_r * 0).
    Triple same = RandomTriple(opt.seed, 7777);
    same.p_r = same.p_l;
    const double eta_r = Eta(same, Side::kCloud);
    const double f0 = ExpectedAcceptance(same.p_l, same.p_r, eta_r);
    const double cross = f0 - kDefaultGamma;
    double sq = 0.0;
    for (double p : same.p_l.Probs()) sq += p * p;
    const MonteCarlo mc0 = RunMonteCarlo(same, opt.trials, HashCombine(opt.seed, 7777));
    const bool ok0 = LkDivergence(same.p_l, same.p_r) == 0.0 && std::abs(cross - 0.5 * sq) < 1e-12 &&
                     std::abs(mc0.accept_l - f0) <= 0.01 && ExpectedAcceptance(same.p_l, same.p_r, eta_r, 1.0) == 1.0;
    rep.Add("delta_zero", ok0,
            fmt::format("delta=0: formula {:.5f} = 0.5*(1-eta_r*0) + 0.5*sum p^2, empirical {:.5f}; gamma=1 gives 1",
                        f0, mc0.accept_l));

    // Disjoint supports: the gamma term is 0.5 * eta_l. The second term is
    // 0.5 * eta_l * sum p_l^2 and vanishes only as p_l flattens.
    double max_gap = 0.0;
    double max_mc_err = 0.0;
    for (std::size_t half : {2u, 4u, 64u, 1024u}) {
      std::vector<double> wl(2 * half, 0.0);
      std::vector<double> wr(2 * half, 0.0);
      for (std::size_t x = 0; x < half; ++x) {
        wl[x] = 1.0;
        wr[half + x] = 1.0 + static_cast<double>(x % 3);
      }
      Triple dj{LogDist::FromWeights(wl), LogDist::FromWeights(wr), {0.4}, {-0.1}};
      const double eta_l = Eta(dj, Side::kDevice);
      const double f = ExpectedAcceptance(dj.p_l, dj.p_r, Eta(dj, Side::kCloud));
      const double first = kDefaultGamma * (1.0 - Eta(dj, Side::kCloud) * LkDivergence(dj.p_l, dj.p_r));
      max_gap = std::max(max_gap, std::abs(first - 0.5 * eta_l));
      const MonteCarlo mc = RunMonteCarlo(dj, std::min<std::size_t>(opt.trials, 200000), HashCombine(opt.seed, half));
      max_mc_err = std::max(max_mc_err, std::abs(mc.accept_l - f));
      if (half == 1024) {
        const bool ok = max_gap < 1e-12 && std::abs(f - 0.5 * eta_l) < 0.5 * eta_l / 1024 + 1e-12 && max_mc_err <= 0.01;
        rep.Add("disjoint_support", ok,
                fmt::format("delta=1: gamma term = 0.5*eta_l exactly (gap {:.1e}); full value {:.5f} vs 0.5*eta_l = "
                            "{:.5f} on a 1024-token support; empirical within {:.4f}",
                            max_gap, f, 0.5 * eta_l, max_mc_err));
      }
    }
  });
}

SuiteReport VerifyMonotonicity(const VerifyOptions& opt) {
  return Timed("monotonicity", [&](SuiteReport& rep) {
    std::size_t violations = 0;
    std::size_t tested = 0;
    std::size_t index = 0;
    std::size_t point_masses = 0;
    while (tested < 1000) {
      const Triple t = RandomTriple(opt.seed + 1, index++);
      const double eta_r = Eta(t, Side::kCloud);
      // Degenerate: the gamma coefficient vanishes identically. Besides eta_l = 0 with
      // delta = 0 this happens whenever p_l is a point mass.
      if (LkDivergence(t.p_l, t.p_r) == 0.0 && eta_r > 1.0 - 1e-12) continue;
      if (IsPointMass(t.p_l)) {
        ++point_masses;
        continue;
      }
      ++tested;
      double prev = -1.0;
      for (int g = 0; g <= 20; ++g) {
        const double a = ExpectedAcceptance(t.p_l, t.p_r, eta_r, g / 20.0);
        if (!(a > prev)) ++violations;
        prev = a;
      }
    }
    rep.Add("strictly_increasing_in_gamma", violations == 0,
            fmt::format("{} instances x 21 gamma values, {} violations ({} point-mass p_l skipped)", tested,
                        violations, point_masses));
  });
}

SuiteReport VerifyScheduling(const VerifyOptions&) {
  return Timed("scheduling", [&](SuiteReport& rep) {
    // 20 x 20 x 20 x 11 x 11: c_dec_l, c_dec_r, rtt (split 40/60), alpha_l, alpha_r.
    std::vector<double> cost;
    for (int i = 0; i < 20; ++i) cost.push_back(0.25 * (i + 1));
    std::vector<double> rtt;
    for (int i = 0; i < 20; ++i) rtt.push_back(0.5 * i);
    std::vector<double> alpha;
    for (int i = 0; i <= 10; ++i) alpha.push_back(i / 10.0);
    std::size_t points = 0;
    std::size_t disagreements = 0;
    std::size_t near_ties = 0;
    std::size_t shape_violations = 0;
    for (double cl : cost)
      for (double cr : cost)
        for (double r : rtt) {
          const CostVector c{cl, cr, 0.4 * r, 0.6 * r};
          std::vector<double> dz(alpha.size() * alpha.size());
          for (std::size_t i = 0; i < alpha.size(); ++i)
            for (std::size_t j = 0; j < alpha.size(); ++j) {
              const AcceptanceEstimate a{alpha[i], alpha[j]};
              const double d = DeltaZ(c, a);
              dz[i * alpha.size() + j] = d;
              const double direct =
                  LatencyPerToken(Placement::kLocal, c, a) - LatencyPerToken(Placement::kRemote, c, a);
              ++points;
              if (std::abs(d) < 1e-9) {
                ++near_ties;
                continue;
              }
              if ((d > 0.0) != (direct > 0.0)) ++disagreements;
            }
          // Non-decreasing in alpha_l, non-increasing in alpha_r.
          for (std::size_t i = 0; i < alpha.size(); ++i)
            for (std::size_t j = 0; j < alpha.size(); ++j) {
              const double d = dz[i * alpha.size() + j];
              if (i + 1 < alpha.size() && dz[(i + 1) * alpha.size() + j] < d - 1e-12) ++shape_violations;
              if (j + 1 < alpha.size() && dz[i * alpha.size() + j + 1] > d + 1e-12) ++shape_violations;
            }
        }
    rep.Add("delta_z_sign", points >= 40000 && disagreements == 0,
            fmt::format("{} lattice points, {} disagreements, {} near-ties skipped", points, disagreements, near_ties));
    rep.Add("delta_z_shape", shape_violations == 0,
            fmt::format("{} monotonicity violations in alpha_l / alpha_r", shape_violations));
  });
}

SuiteReport VerifyPipelines(const VerifyOptions&) {
  return Timed("pipelines", [&](SuiteReport& rep) {
    struct Case {
      const char* name;
      CostVector costs;
      bool accept_l;
      bool accept_r;
      double expected;
    };
    const Case cases[] = {
        {"reject_l_accept_r", {1.0, 1.5, 1.2, 1.8}, false, true, 1.5},
        {"accept_l_reject_r", {2.0, 2.0, 1.5, 1.0}, true, false, 4.5},
        {"accept_both", {1.0, 1.5, 1.5, 1.8}, true, true, 1.5},
        {"reject_both", {2.0, 1.0, 1.5, 1.8}, false, false, 4.3},
    };
    for (const auto& c : cases) {
      const auto res = sim::Simulate(sim::AcceptanceTrace::Constant(1000, c.accept_l, c.accept_r), c.costs,
                                     sim::NetModel{}, {});
      double worst = 0.0;
      for (std::size_t i = 900; i < res.per_token.size(); ++i) worst = std::max(worst, std::abs(res.per_token[i] - c.expected));
      rep.Add(c.name, worst <= 1e-6,
              fmt::format("steady per-token {:.9f}, expected {}, max deviation over last 100 tokens {:.1e}",
                          res.SteadyState(), c.expected, worst));
    }
  });
}

SuiteReport VerifySpeedup(const VerifyOptions& opt) {
  return Timed("speedup", [&](SuiteReport& rep) {
    const std::vector<double> cl{0.5, 1.0, 1.5, 2.5, 4.0};
    const std::vector<double> rtt{0.2, 0.8, 1.5, 2.5, 4.0};
    const std::vector<double> alpha{0.0, 0.25, 0.5, 0.75, 1.0};
    const auto points = sim::SpeedupCurve(cl, {1.5}, rtt, alpha, 10000, opt.seed);
    double worst = 0.0;
    double worst_flat = 0.0;
    std::size_t flat = 0;
    for (const auto& p : points) {
      const double err = std::abs(p.empirical / p.theoretical - 1.0);
      worst = std::max(worst, err);
      if (p.c_dec_l > p.c_dec_r + p.rtt) {
        ++flat;
        worst_flat = std::max({worst_flat, std::abs(p.empirical - 1.0), std::abs(p.theoretical - 1.0)});
      }
    }
    if (opt.csv) sim::WriteSpeedupCsv(*opt.csv, points);
    rep.Add("speedup_within_2pct", worst < 0.02,
            fmt::format("{} grid points, max relative error {:.4f} (< 0.02)", points.size(), worst));
    rep.Add("no_speedup_when_device_bound", flat > 0 && worst_flat < 1e-9,
            fmt::format("{} points with c_l > c_r + rtt, max |S - 1| = {:.1e}", flat, worst_flat));
  });
}

namespace {

// Acceptance traces recorded from the toy model through the sequential engine.
std::vector<sim::AcceptanceTrace> RecordTraces(std::uint64_t seed, std::size_t count, std::size_t tokens) {
  SyntheticCorpusSpec spec;
  spec.seed = seed;
  const auto corpus = std::make_shared<const Corpus>(SyntheticCorpus(spec));
  std::vector<sim::AcceptanceTrace> out;
  for (std::size_t i = 0; i < count; ++i) {
    runtime::SessionConfig s;
    s.vocab_size = spec.vocab;
    s.seed = HashCombine(seed, i);
    s.max_new_tokens = tokens;
    const auto& doc = corpus->docs()[i % corpus->docs().size()];
    s.prompt.assign(doc.tokens.begin(), doc.tokens.begin() + std::min<std::size_t>(8, doc.tokens.size()));
    const auto r = runtime::RunSequential(s, {corpus, runtime::DefaultHalf(Side::kDevice)},
                                          {corpus, runtime::DefaultHalf(Side::kCloud)});
    out.push_back(sim::AcceptanceTrace::FromLog(r.log));
  }
  return out;
}

}  // namespace

SuiteReport VerifyStrategies(const VerifyOptions& opt) {
  return Timed("strategies", [&](SuiteReport& rep) {
    const auto traces = RecordTraces(opt.seed, 50, 100);
    double rate_l = 0.0;
    double rate_r = 0.0;
    for (const auto& t : traces) {
      rate_l += t.Rate(Side::kDevice) / static_cast<double>(traces.size());
      rate_r += t.Rate(Side::kCloud) / static_cast<double>(traces.size());
    }
    sim::SimConfig cfg;
    cfg.costs = {120.0, 30.0, 0.0, 0.0};  // slow device, fast cloud
    cfg.net.base_latency_ms = 40.0;
    cfg.sizes = sim::MessageSizes::FromWire(16);
    const sim::StrategyKind kinds[] = {sim::StrategyKind::kDevice, sim::StrategyKind::kCloud,
                                       sim::StrategyKind::kRandom, sim::StrategyKind::kDragon};
    std::vector<double> advantage;
    bool dominates = true;
    std::string detail;
    for (double extra : {0.0, 100.0, 300.0, 500.0}) {
      cfg.net.extra_latency_ms = extra;
      double mean[4] = {0, 0, 0, 0};
      for (std::size_t k = 0; k < traces.size(); ++k) {
        for (int s = 0; s < 4; ++s) {
          cfg.strategy = {kinds[s], HashCombine(opt.seed, k)};
          mean[s] += sim::Simulate(traces[k], cfg).total_time / static_cast<double>(traces.size());
        }
      }
      const double best = std::min({mean[0], mean[1], mean[2]});
      dominates = dominates && mean[3] <= best * 1.01;
      advantage.push_back(best - mean[3]);
      detail += fmt::format(" extra={}: device={:.0f} cloud={:.0f} random={:.0f} dragon={:.0f};", extra, mean[0],
                            mean[1], mean[2], mean[3]);
      if (opt.csv) {
        *opt.csv << "strategies," << extra << ',' << mean[0] << ',' << mean[1] << ',' << mean[2] << ',' << mean[3] << '\n';
      }
    }
    bool monotone = true;
    for (std::size_t i = 1; i < advantage.size(); ++i) monotone = monotone && advantage[i] >= advantage[i - 1];
    rep.Add("dragon_matches_or_beats_baselines", dominates,
            fmt::format("50 recorded traces (acceptance device {:.2f}, cloud {:.2f}), mean total ms:{}", rate_l, rate_r,
                        detail));
    std::string adv;
    for (double a : advantage) adv += fmt::format(" {:.0f}", a);
    rep.Add("advantage_non_decreasing", monotone, "advantage over best baseline (ms) at extra 0/100/300/500:" + adv);
  });
}

namespace {

transport::Message RandomMessage(std::uint64_t seed, std::uint64_t i) {
  std::uint64_t k = 0;
  auto u = [&] { return UniformAt(seed, HashCombine(kSuiteStream, i), k++); };
  auto u32 = [&] { return static_cast<std::uint32_t>(u() * 4294967296.0); };
  switch (static_cast<int>(u() * 6.0)) {
    case 0: {
      transport::DraftMsg d;
      d.step = u32();
      d.token = u32();
      d.h = (u() - 0.5) * 1e3;
      d.decode_ms = static_cast<float>(u() * 100.0);
      d.dist.vocab_size = 2 + static_cast<std::uint32_t>(u() * 5000.0);
      const std::size_t n = 1 + static_cast<std::size_t>(u() * std::min<double>(d.dist.vocab_size, 80.0));
      const double stride = static_cast<double>(d.dist.vocab_size) / static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j) {
        d.dist.entries.push_back({static_cast<TokenId>(j * stride), static_cast<std::uint16_t>(1 + u() * 0x1fff)});
      }
      return d;
    }
    case 1: {
      std::optional<Side> sw;
      const double r = u();
      if (r < 0.33) sw = Side::kDevice;
      else if (r < 0.66) sw = Side::kCloud;
      return transport::TargetMsg{u32(), u32(), u() < 0.5, u() < 0.5, sw};
    }
    case 2: return transport::SwitchMsg{u32(), u() < 0.5 ? Side::kDevice : Side::kCloud};
    case 3: return transport::ProbeMsg{u32(), u() < 0.5, u() * 1e7};
    case 4: return transport::HelloMsg{};
    default: return transport::ByeMsg{};
  }
}

}  // namespace

SuiteReport VerifyTransport(const VerifyOptions& opt) {
  return Timed("transport", [&](SuiteReport& rep) {
    std::size_t failures = 0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
      const transport::Message m = RandomMessage(opt.seed, i);
      for (auto codec : {transport::Codec::kNone, transport::Codec::kBlock}) {
        const auto frame = transport::Encode(m, codec);
        const auto back = transport::Decode(frame);
        if (!(back == m) || transport::Encode(back, codec) != frame) ++failures;
      }
    }
    rep.Add("round_trip", failures == 0, fmt::format("10000 random messages x 2 codecs, {} mismatches", failures));

    transport::DraftMsg d;
    d.dist.vocab_size = 32000;
    for (std::uint32_t j = 0; j < 64; ++j) d.dist.entries.push_back({j * 7, 0x2000});
    const std::size_t size = transport::Encode(d).size();
    rep.Add("draft_size", size < 450, fmt::format("DraftMsg with 64 kept tokens: {} bytes (< 450)", size));
  });
}

namespace {

runtime::SessionConfig DemoSession(const SyntheticCorpusSpec& spec, const Corpus& corpus, std::uint64_t seed,
                                   std::size_t tokens) {
  runtime::SessionConfig s;
  s.vocab_size = spec.vocab;
  s.seed = seed;
  s.max_new_tokens = tokens;
  s.prompt.assign(corpus.docs()[0].tokens.begin(), corpus.docs()[0].tokens.begin() + 8);
  return s;
}

double MeanSteadyLatency(const runtime::NodeResult& r) {
  if (r.metrics.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 1; i < r.metrics.size(); ++i) sum += r.metrics[i].latency_ms;
  return sum / static_cast<double>(r.metrics.size() - 1);
}

double AcceptanceRate(const std::vector<AggregationOutcome>& log) {
  if (log.empty()) return 0.0;
  double n = 0.0;
  for (const auto& o : log) n += (o.accept_l ? 0.5 : 0.0) + (o.accept_r ? 0.5 : 0.0);
  return n / static_cast<double>(log.size());
}

}  // namespace

SuiteReport VerifyDistributed(const VerifyOptions& opt) {
  return Timed("distributed", [&](SuiteReport& rep) {
    SyntheticCorpusSpec spec;
    spec.seed = opt.seed;
    const auto corpus = std::make_shared<const Corpus>(SyntheticCorpus(spec));
    const auto session = DemoSession(spec, *corpus, opt.seed, 100);
    const runtime::SideSetup dev{corpus, runtime::DefaultHalf(Side::kDevice)};
    const runtime::SideSetup cld{corpus, runtime::DefaultHalf(Side::kCloud)};
    const auto reference = runtime::Tokens(runtime::RunSequential(session, dev, cld).log);
    struct Variant {
      const char* name;
      runtime::AggregatorPolicy policy;
      std::vector<std::uint32_t> switches;
    };
    const Variant variants[] = {{"static_device", runtime::AggregatorPolicy::kDevice, {}},
                                {"static_cloud", runtime::AggregatorPolicy::kCloud, {}},
                                {"forced_switches", runtime::AggregatorPolicy::kDevice, {3, 4, 10, 30, 31, 32, 60}}};
    for (const auto& v : variants) {
      runtime::NodeConfig d{Side::kDevice, session, dev, {}};
      runtime::NodeConfig c{Side::kCloud, session, cld, {}};
      d.options.policy = c.options.policy = v.policy;
      d.options.switch_after = c.options.switch_after = v.switches;
      d.options.decode_delay_ms = 1.0;
      c.options.decode_delay_ms = 0.5;
      runtime::LinkOptions link;
      link.device_to_cloud = runtime::MakeDelay(2.0);
      link.cloud_to_device = runtime::MakeDelay(2.0);
      const auto r = runtime::RunLoopbackPair(d, c, link);
      const bool ok = r.device.completed && r.cloud.completed && r.device.log == r.cloud.log &&
                      runtime::Tokens(r.device.log) == reference;
      rep.Add(v.name, ok,
              fmt::format("100 tokens, logs equal {}, matches sequential {}, switches {}, rollbacks {}/{}{}{}",
                          r.device.log == r.cloud.log, runtime::Tokens(r.device.log) == reference, r.device.switches,
                          r.device.rollbacks, r.cloud.rollbacks, r.device.error.empty() ? "" : " device: " + r.device.error,
                          r.cloud.error.empty() ? "" : " cloud: " + r.cloud.error));
    }
  });
}

SuiteReport VerifyVanilla(const VerifyOptions& opt) {
  return Timed("vanilla", [&](SuiteReport& rep) {
    SyntheticCorpusSpec spec;
    spec.seed = opt.seed;
    const auto corpus = std::make_shared<const Corpus>(SyntheticCorpus(spec));
    const auto session = DemoSession(spec, *corpus, opt.seed, 16);
    // Both sides rank the whole corpus and the cloud keeps one extra
    // document: similar mixtures, acceptance well above 0.5.
    const runtime::SideSetup dev{corpus, RetrievalHalf::kAll};
    const runtime::SideSetup cld{corpus, RetrievalHalf::kAll};
    const double c_l = 50.0;
    const double c_r = 30.0;
    const double one_way = 100.0;
    auto run = [&](bool vanilla) {
      runtime::NodeConfig d{Side::kDevice, session, dev, {}};
      runtime::NodeConfig c{Side::kCloud, session, cld, {}};
      c.session.docs = session.docs + 1;
      d.options.vanilla = c.options.vanilla = vanilla;
      d.options.decode_delay_ms = c_l;
      c.options.decode_delay_ms = c_r;
      runtime::LinkOptions link;
      link.device_to_cloud = runtime::MakeDelay(one_way);
      link.cloud_to_device = runtime::MakeDelay(one_way);
      return runtime::RunLoopbackPair(d, c, link);
    };
    const auto van = run(true);
    const auto spec_run = run(false);
    const double expected = std::max(c_l, c_r + 2.0 * one_way);
    const double measured = MeanSteadyLatency(van.device);
    const bool ok_van = van.device.completed && van.cloud.completed && std::abs(measured / expected - 1.0) <= 0.10;
    rep.Add("vanilla_latency", ok_van,
            fmt::format("per-token {:.1f} ms vs max(c_l, c_r + rtt) = {:.1f} ms (within 10%){}", measured, expected,
                        van.device.error.empty() ? "" : " error: " + van.device.error));
    const double fast = MeanSteadyLatency(spec_run.device);
    const double rate = AcceptanceRate(spec_run.device.log);
    const bool same_output = runtime::Tokens(van.device.log) == runtime::Tokens(spec_run.device.log);
    rep.Add("speculative_faster", spec_run.device.completed && rate > 0.5 && fast < measured && same_output,
            fmt::format("speculative {:.1f} ms/token < vanilla {:.1f} at acceptance {:.2f}; same tokens {}", fast,
                        measured, rate, same_output));
  });
}

std::vector<std::string> SuiteNames() {
  return {"aggregation", "acceptance", "monotonicity", "scheduling", "pipelines",
          "speedup",    "distributed", "vanilla",     "strategies", "transport"};
}

SuiteReport RunSuite(const std::string& name, const VerifyOptions& opt) {
  static const std::map<std::string, std::function<SuiteReport(const VerifyOptions&)>> suites{
      {"aggregation", VerifyAggregation}, {"acceptance", VerifyAcceptance}, {"monotonicity", VerifyMonotonicity},
      {"scheduling", VerifyScheduling},   {"pipelines", VerifyPipelines},   {"speedup", VerifySpeedup},
      {"distributed", VerifyDistributed}, {"vanilla", VerifyVanilla},       {"strategies", VerifyStrategies},
      {"transport", VerifyTransport}};
  const auto it = suites.find(name);
  if (it == suites.end()) throw std::invalid_argument("unknown suite '" + name + "'");
  return it->second(opt);
}

}  // namespace dragon::tools
