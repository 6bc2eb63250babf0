#include "dragon/sim/simulator.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "dragon/random.h"
#include "dragon/transport/wire.h"

namespace dragon::sim {

double NetModel::amplitude() const {
  return jitter_amplitude_ms ? *jitter_amplitude_ms : (base_latency_ms + extra_latency_ms) / 5.0;
}

void NetModel::Validate() const {
  const double level = base_latency_ms + extra_latency_ms;
  if (base_latency_ms < 0.0 || extra_latency_ms < 0.0) throw std::invalid_argument("latency must be non-negative");
  const double a = amplitude();
  if (a < 0.0 || a > level) throw std::invalid_argument("jitter amplitude must lie in [0, base + extra]");
  if (a > 0.0 && !(jitter_period_s > 0.0)) throw std::invalid_argument("jitter period must be positive");
  if (bandwidth < 0.0) throw std::invalid_argument("bandwidth must be non-negative");
}

double InstantaneousLatency(const NetModel& net, double t_ms) {
  const double a = net.amplitude();
  const double level = net.base_latency_ms + net.extra_latency_ms;
  if (a == 0.0) return level;
  return level + a * std::sin(2.0 * kPi * t_ms / (net.jitter_period_s * 1000.0));
}

AcceptanceTrace AcceptanceTrace::Constant(std::size_t n, bool accept_l, bool accept_r) {
  return {std::vector<StepAcceptance>(n, StepAcceptance{accept_l, accept_r})};
}

AcceptanceTrace AcceptanceTrace::Bernoulli(std::size_t n, double rate_l, double rate_r, std::uint64_t seed) {
  AcceptanceTrace t;
  t.steps.reserve(n);
  const std::uint64_t stream_l = HashCombine(streams::kTrace, 0);
  const std::uint64_t stream_r = HashCombine(streams::kTrace, 1);
  for (std::size_t i = 0; i < n; ++i) {
    t.steps.push_back({UniformAt(seed, stream_l, i) < rate_l, UniformAt(seed, stream_r, i) < rate_r});
  }
  return t;
}

AcceptanceTrace AcceptanceTrace::FromLog(const std::vector<AggregationOutcome>& log) {
  AcceptanceTrace t;
  for (const auto& o : log) t.steps.push_back({o.accept_l, o.accept_r});
  return t;
}

namespace {

bool ParseFlag(std::string_view s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw std::invalid_argument("bad acceptance flag '" + std::string(s) + "'");
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

}  // namespace

AcceptanceTrace AcceptanceTrace::ParseCsv(std::string_view text) {
  AcceptanceTrace t;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    const std::string_view row = Trim(line);
    if (row.empty()) continue;
    if (header) {
      header = false;
      if (row != "step,accept_l,accept_r") throw std::invalid_argument("trace header must be step,accept_l,accept_r");
      continue;
    }
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos) throw std::invalid_argument("trace row needs three fields");
    std::size_t step = 0;
    const auto field = row.substr(0, c1);
    const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), step);
    if (ec != std::errc{} || p != field.data() + field.size()) throw std::invalid_argument("bad trace step");
    if (step != t.steps.size()) throw std::invalid_argument("trace steps must be 0,1,2,...");
    t.steps.push_back({ParseFlag(row.substr(c1 + 1, c2 - c1 - 1)), ParseFlag(row.substr(c2 + 1))});
  }
  return t;
}

AcceptanceTrace AcceptanceTrace::LoadCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseCsv(buf.str());
}

void AcceptanceTrace::WriteCsv(std::ostream& out) const {
  out << "step,accept_l,accept_r\n";
  for (std::size_t i = 0; i < steps.size(); ++i) {
    out << i << ',' << (steps[i].accept_l ? 1 : 0) << ',' << (steps[i].accept_r ? 1 : 0) << '\n';
  }
}

double AcceptanceTrace::Rate(Side side) const {
  if (steps.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& s : steps) n += (side == Side::kDevice ? s.accept_l : s.accept_r) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(steps.size());
}

StrategyKind ParseStrategy(std::string_view name) {
  if (name == "device") return StrategyKind::kDevice;
  if (name == "cloud") return StrategyKind::kCloud;
  if (name == "random") return StrategyKind::kRandom;
  if (name == "dragon") return StrategyKind::kDragon;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

std::string_view ToString(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kDevice: return "device";
    case StrategyKind::kCloud: return "cloud";
    case StrategyKind::kRandom: return "random";
    case StrategyKind::kDragon: return "dragon";
  }
  return "?";
}

std::string_view ToString(EventKind kind) {
  switch (kind) {
    case EventKind::kDecodeStart: return "decode_start";
    case EventKind::kDecodeDone: return "decode_done";
    case EventKind::kDraftArrive: return "draft_arrive";
    case EventKind::kAggregate: return "aggregate";
    case EventKind::kTargetArrive: return "target_arrive";
    case EventKind::kSwitch: return "switch";
  }
  return "?";
}

MessageSizes MessageSizes::FromWire(std::size_t kept) {
  transport::DraftMsg d;
  d.dist.vocab_size = static_cast<std::uint32_t>(std::max<std::size_t>(kept, 2));
  for (std::size_t i = 0; i < kept; ++i) d.dist.entries.push_back({static_cast<TokenId>(i), 0x2000});
  const transport::TargetMsg t{0, 0, true, true, Side::kCloud};
  return {static_cast<double>(transport::Encode(d).size()), static_cast<double>(transport::Encode(t).size())};
}

double SimResult::SteadyState() const {
  if (per_token.empty()) return 0.0;
  const std::size_t from = per_token.size() / 2;
  double sum = 0.0;
  for (std::size_t i = from; i < per_token.size(); ++i) sum += per_token[i];
  return sum / static_cast<double>(per_token.size() - from);
}

namespace {

enum class Ev { kDecodeDone, kDraftArrive, kTargetArrive };

struct Event {
  double time;
  std::uint64_t seq;
  Ev kind;
  Side side;    // where the event lands
  Side origin;  // drafts: whose draft
  std::uint32_t step;
  std::uint64_t tag;  // decode id, or draft stamp, or generation after a rejection
  bool rejected;      // targets: the receiving side's draft was rejected
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  }
};

class Simulation {
 public:
  Simulation(const AcceptanceTrace& trace, const SimConfig& cfg) : trace_(trace), cfg_(cfg), n_(trace.size()) {
    for (auto& view : avail_)
      for (auto& v : view) v.assign(n_, 0);
    switch (cfg.strategy.kind) {
      case StrategyKind::kDevice: aggregator_ = Side::kDevice; break;
      case StrategyKind::kCloud: aggregator_ = Side::kCloud; break;
      default: aggregator_ = cfg.initial_aggregator; break;
    }
  }

  SimResult Run() {
    for (Side s : {Side::kDevice, Side::kCloud}) TryDecode(s);
    while (!queue_.empty() && targets_ < n_) {
      const Event e = queue_.top();
      queue_.pop();
      now_ = e.time;
      switch (e.kind) {
        case Ev::kDecodeDone: OnDecodeDone(e); break;
        case Ev::kDraftArrive: OnDraftArrive(e); break;
        case Ev::kTargetArrive: OnTargetArrive(e); break;
      }
    }
    if (targets_ < n_) throw std::logic_error("simulation stalled");
    result_.total_time = last_target_;
    return std::move(result_);
  }

 private:
  struct SideState {
    std::uint32_t next = 0;   // next step to decode
    std::uint32_t known = 0;  // targets learned
    std::uint64_t gen = 0;    // rejections learned
    bool busy = false;
    std::uint64_t decode_id = 0;
  };

  SideState& St(Side s) { return sides_[Index(s)]; }

  double DecodeCost(Side s, std::uint32_t step) const {
    if (cfg_.decode_models) return (*cfg_.decode_models)[Index(s)].Predict(static_cast<double>(cfg_.prompt_len + step));
    return s == Side::kDevice ? cfg_.costs.c_dec_l : cfg_.costs.c_dec_r;
  }

  double Delay(Side from, double at, double bytes) const {
    const double trans = from == Side::kDevice ? cfg_.costs.c_trans_l : cfg_.costs.c_trans_r;
    const double bw = cfg_.net.bandwidth > 0.0 ? bytes / cfg_.net.bandwidth : 0.0;
    return trans + InstantaneousLatency(cfg_.net, at) + bw;
  }

  // Links are FIFO like the TCP stream they model.
  double ArrivalTime(Side from, double bytes) {
    double& last = last_arrival_[Index(from)];
    last = std::max(now_ + Delay(from, now_, bytes), last);
    return last;
  }

  void Push(Event e) {
    e.seq = seq_++;
    queue_.push(e);
  }

  void Record(EventKind kind, Side side, std::uint32_t step) {
    if (cfg_.record_events) result_.events.push_back({now_, kind, side, step});
  }

  std::size_t Capacity() const { return cfg_.vanilla ? 1 : cfg_.queue_capacity; }

  void TryDecode(Side s) {
    SideState& st = St(s);
    if (st.busy || st.next >= n_ || st.next - st.known >= Capacity()) return;
    st.busy = true;
    ++st.decode_id;
    Record(EventKind::kDecodeStart, s, st.next);
    Push({now_ + DecodeCost(s, st.next), 0, Ev::kDecodeDone, s, s, st.next, st.decode_id, false});
  }

  void OnDecodeDone(const Event& e) {
    SideState& st = St(e.side);
    if (e.tag != st.decode_id || !st.busy) return;  // preempted
    st.busy = false;
    st.next = e.step + 1;
    avail_[Index(e.side)][Index(e.side)][e.step] = st.gen + 1;
    Record(EventKind::kDecodeDone, e.side, e.step);
    const Side other = Other(e.side);
    Push({ArrivalTime(e.side, cfg_.sizes.draft_bytes), 0, Ev::kDraftArrive, other, e.side, e.step, st.gen, false});
    TryDecode(e.side);
    TryAggregate();
  }

  void OnDraftArrive(const Event& e) {
    avail_[Index(e.side)][Index(e.origin)][e.step] = e.tag + 1;
    Record(EventKind::kDraftArrive, e.side, e.step);
    TryAggregate();
  }

  void OnTargetArrive(const Event& e) {
    SideState& st = St(e.side);
    st.known = e.step + 1;
    Record(EventKind::kTargetArrive, e.side, e.step);
    if (e.rejected) Preempt(e.side, e.step, e.tag);
    TryDecode(e.side);
    TryAggregate();
  }

  void Preempt(Side s, std::uint32_t step, std::uint64_t gen) {
    SideState& st = St(s);
    st.gen = gen;
    st.busy = false;
    ++st.decode_id;
    st.next = step + 1;
  }

  bool Ready(std::uint32_t t) {
    const auto v = Index(aggregator_);
    if (St(aggregator_).known != t) return false;
    for (Side s : {Side::kDevice, Side::kCloud}) {
      if (avail_[v][Index(s)][t] != rejections_[Index(s)] + 1) return false;
    }
    return true;
  }

  void TryAggregate() {
    while (targets_ < n_ && Ready(static_cast<std::uint32_t>(targets_))) AggregateStep();
  }

  void AggregateStep() {
    const auto t = static_cast<std::uint32_t>(targets_);
    const Side a = aggregator_;
    const Side o = Other(a);
    const StepAcceptance flags = trace_.steps[t];
    Record(EventKind::kAggregate, a, t);
    result_.per_token.push_back(now_ - last_target_);
    result_.side_history.push_back(a);
    last_target_ = now_;
    ++targets_;
    St(a).known = t + 1;

    const bool rejected[2] = {!flags.accept_l, !flags.accept_r};
    for (Side s : {Side::kDevice, Side::kCloud}) {
      if (rejected[Index(s)]) ++rejections_[Index(s)];
    }
    tracker_.Observe(Side::kDevice, flags.accept_l ? 1.0 : 0.0);
    tracker_.Observe(Side::kCloud, flags.accept_r ? 1.0 : 0.0);

    const Side next = NextAggregator(t, a);
    if (rejected[Index(a)]) Preempt(a, t, rejections_[Index(a)]);
    Push({ArrivalTime(a, cfg_.sizes.target_bytes), 0, Ev::kTargetArrive, o, o, t, rejections_[Index(o)],
          rejected[Index(o)]});
    if (next != a) {
      aggregator_ = next;
      ++result_.switches;
      Record(EventKind::kSwitch, next, t + 1);
    }
    TryDecode(a);
  }

  Side NextAggregator(std::uint32_t t, Side a) const {
    switch (cfg_.strategy.kind) {
      case StrategyKind::kDevice:
      case StrategyKind::kCloud:
        return a;
      case StrategyKind::kRandom:
        return UniformAt(cfg_.strategy.seed, streams::kStrategy, t) < 0.5 ? Side::kDevice : Side::kCloud;
      case StrategyKind::kDragon: {
        const Side o = Other(a);
        const CostVector c{DecodeCost(a, t + 1), DecodeCost(o, t + 1), Delay(a, now_, cfg_.sizes.target_bytes),
                           Delay(o, now_, cfg_.sizes.draft_bytes)};
        return ChooseSide(c, tracker_.From(a)) == Placement::kRemote ? o : a;
      }
    }
    return a;
  }

  const AcceptanceTrace& trace_;
  const SimConfig& cfg_;
  const std::size_t n_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  std::array<SideState, 2> sides_{};
  // avail_[view][owner][step]: stamp + 1 of the draft visible at `view`, 0 if none.
  std::array<std::array<std::vector<std::uint64_t>, 2>, 2> avail_;
  std::array<std::uint64_t, 2> rejections_{0, 0};
  std::array<double, 2> last_arrival_{0.0, 0.0};
  Side aggregator_ = Side::kDevice;
  std::size_t targets_ = 0;
  double last_target_ = 0.0;
  AcceptanceTracker tracker_;
  SimResult result_;
};

}  // namespace

SimResult Simulate(const AcceptanceTrace& trace, const SimConfig& config) {
  if (trace.empty()) throw std::invalid_argument("trace must not be empty");
  if (config.queue_capacity == 0) throw std::invalid_argument("queue capacity must be positive");
  config.net.Validate();
  Simulation sim(trace, config);
  return sim.Run();
}

SimResult Simulate(const AcceptanceTrace& trace, const CostVector& costs, const NetModel& net, Strategy strategy) {
  SimConfig cfg;
  cfg.costs = costs;
  cfg.net = net;
  cfg.strategy = strategy;
  return Simulate(trace, cfg);
}

void WriteResultCsv(std::ostream& out, const SimResult& result) {
  out << "step,time_ms,latency_ms,aggregator\n";
  double t = 0.0;
  for (std::size_t i = 0; i < result.per_token.size(); ++i) {
    t += result.per_token[i];
    out << i << ',' << t << ',' << result.per_token[i] << ',' << ToString(result.side_history[i]) << '\n';
  }
}

std::vector<SpeedupPoint> SpeedupCurve(const std::vector<double>& c_dec_l, const std::vector<double>& c_dec_r,
                                       const std::vector<double>& rtt, const std::vector<double>& alpha_r,
                                       std::size_t tokens, std::uint64_t seed) {
  if (c_dec_l.empty() || c_dec_r.empty() || rtt.empty() || alpha_r.empty()) {
    throw std::invalid_argument("speedup grids must be non-empty");
  }
  if (tokens == 0) throw std::invalid_argument("need at least one token");
  std::vector<SpeedupPoint> out;
  const AcceptanceTrace vanilla = AcceptanceTrace::Constant(tokens, false, false);
  std::uint64_t point = 0;
  for (double cl : c_dec_l) {
    for (double cr : c_dec_r) {
      for (double r : rtt) {
        const CostVector costs{cl, cr, r / 2.0, r / 2.0};
        const double base = Simulate(vanilla, costs, NetModel{}, {}).total_time;
        for (double a : alpha_r) {
          const auto trace = AcceptanceTrace::Bernoulli(tokens, 0.0, a, HashCombine(seed, point++));
          const double t = Simulate(trace, costs, NetModel{}, {}).total_time;
          out.push_back({cl, cr, r, a, t > 0.0 ? base / t : 1.0, TheoreticalSpeedup(costs, a)});
        }
      }
    }
  }
  return out;
}

void WriteSpeedupCsv(std::ostream& out, const std::vector<SpeedupPoint>& points) {
  out << "c_dec_l,c_dec_r,rtt,alpha_r,empirical,theoretical\n";
  for (const auto& p : points) {
    out << p.c_dec_l << ',' << p.c_dec_r << ',' << p.rtt << ',' << p.alpha_r << ',' << p.empirical << ','
        << p.theoretical << '\n';
  }
}

}  // namespace dragon::sim
