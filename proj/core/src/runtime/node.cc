#include "dragon/runtime/node.h"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <variant>

#include "dragon/profiler.h"
#include "dragon/random.h"
#include "dragon/scheduler.h"

namespace dragon::runtime {

AggregatorPolicy ParseAggregatorPolicy(std::string_view name) {
  if (name == "device") return AggregatorPolicy::kDevice;
  if (name == "cloud") return AggregatorPolicy::kCloud;
  if (name == "auto") return AggregatorPolicy::kAuto;
  throw std::invalid_argument("unknown aggregator policy '" + std::string(name) + "'");
}

namespace {

using namespace std::chrono_literals;
using transport::Channel;
using transport::NowMs;

// Decode cost per side, from observed durations.
class CostTracker {
 public:
  void Observe(double t, double c) {
    model_ = n_ == 0 ? DecodeModel{0.0, 1.0, c} : UpdateRuntime(model_, t, c, kDefaultZeta);
    ++n_;
  }
  bool ready() const { return n_ > 0; }
  double Predict(double t) const { return model_.Predict(t); }

 private:
  DecodeModel model_;
  std::size_t n_ = 0;
};

class Node {
 public:
  Node(const NodeConfig& cfg, Channel& ch)
      : cfg_(cfg), ch_(ch), role_(cfg.role), peer_(Other(cfg.role)), decoder_(MakeEmptyState()) {}

  NodeResult Run();

 private:
  static DecoderState MakeEmptyState() { return DecoderState{}; }

  void DecodeLoop();
  void ReadLoop();
  void AggregateLoop();
  void Shutdown();

  bool CanDecode() const;
  bool ReadyToAggregate() const;
  void AggregateHead();
  void ApplyOutcome(AggregationOutcome o);
  std::optional<Side> Decide();
  void OnMessage(const transport::Message& m);
  void FailLocked(const std::string& what);
  std::string DumpLocked() const;
  std::size_t Capacity() const { return cfg_.options.vanilla ? 1 : cfg_.options.queue_capacity; }
  std::deque<DraftRecord>& Queue(Side s) { return queues_[Index(s)]; }
  const std::deque<DraftRecord>& Queue(Side s) const { return queues_[Index(s)]; }

  const NodeConfig& cfg_;
  Channel& ch_;
  const Side role_;
  const Side peer_;

  std::mutex mu_;
  std::condition_variable cv_;
  DecoderState decoder_;  // committed: prompt + targets + own queued drafts
  std::uint64_t epoch_ = 0;
  std::array<std::deque<DraftRecord>, 2> queues_;
  std::vector<AggregationOutcome> log_;
  std::vector<TokenId> accepted_;  // prompt + targets
  Side aggregator_ = Side::kDevice;
  std::optional<std::uint32_t> awaiting_echo_;
  std::map<std::uint32_t, double> target_sent_at_;
  bool done_ = false;
  bool halt_ = false;
  bool closing_ = false;
  bool peer_bye_ = false;
  bool reader_ended_ = false;
  std::string error_;
  AcceptanceTracker acceptance_;
  LinkEstimator link_;
  std::array<CostTracker, 2> costs_;
  double start_ms_ = 0.0;
  double last_append_ms_ = 0.0;
  NodeResult result_;
};

NodeResult Node::Run() {
  start_ms_ = NowMs();
  try {
    Validate(cfg_.session);
    if (cfg_.options.queue_capacity == 0) throw std::invalid_argument("queue capacity must be positive");
    decoder_ = BuildDecoderState(cfg_.session, cfg_.setup);
  } catch (const std::exception& e) {
    result_.error = std::string("setup: ") + e.what();
    ch_.Abort();
    return result_;
  }
  accepted_ = cfg_.session.prompt;
  last_append_ms_ = start_ms_;
  aggregator_ = cfg_.options.policy == AggregatorPolicy::kCloud ? Side::kCloud : Side::kDevice;
  if (cfg_.session.max_new_tokens == 0) {
    done_ = true;
    result_.ttft_ms = NowMs() - start_ms_;
  }
  try {
    ch_.Send(transport::HelloMsg{});
  } catch (const std::exception& e) {
    FailLocked(std::string("hello: ") + e.what());
  }

  std::thread reader([this] { ReadLoop(); });
  std::thread decoder([this] { DecodeLoop(); });
  AggregateLoop();
  {
    std::lock_guard lock(mu_);
    closing_ = true;
  }
  cv_.notify_all();
  decoder.join();
  Shutdown();
  reader.join();

  std::lock_guard lock(mu_);
  result_.log = log_;
  result_.completed = done_ && error_.empty();
  result_.error = error_;
  result_.bytes_sent = ch_.bytes_sent();
  result_.bytes_received = ch_.bytes_received();
  return result_;
}

void Node::FailLocked(const std::string& what) {
  if (error_.empty()) error_ = what;
  halt_ = true;
  cv_.notify_all();
}

std::string Node::DumpLocked() const {
  std::ostringstream os;
  os << " [role=" << ToString(role_) << " aggregator=" << ToString(aggregator_) << " targets=" << log_.size()
     << " epoch=" << epoch_;
  for (Side s : {Side::kDevice, Side::kCloud}) {
    os << ' ' << ToString(s) << "_queue=";
    for (const auto& d : Queue(s)) os << d.step << ':' << d.token << ',';
  }
  if (awaiting_echo_) os << " awaiting_echo=" << *awaiting_echo_;
  os << ']';
  return os.str();
}

bool Node::CanDecode() const {
  return decoder_.generation_step() < cfg_.session.max_new_tokens && Queue(role_).size() < Capacity();
}

bool Node::ReadyToAggregate() const {
  return aggregator_ == role_ && !Queue(Side::kDevice).empty() && !Queue(Side::kCloud).empty();
}

void Node::DecodeLoop() {
  std::unique_lock lock(mu_);
  while (true) {
    cv_.wait(lock, [&] { return halt_ || done_ || closing_ || CanDecode(); });
    if (halt_ || done_ || closing_) return;
    DecoderState work = decoder_;
    const std::uint64_t epoch = epoch_;
    lock.unlock();

    const auto t0 = std::chrono::steady_clock::now();
    const double start = NowMs();
    std::optional<DraftRecord> draft;
    std::string failure;
    try {
      draft = DecodeStep(work, UniformAt(cfg_.session.seed, streams::kDraft, work.generation_step()), role_);
    } catch (const std::exception& e) {
      failure = std::string("decode: ") + e.what();
    }
    const double emulated = cfg_.options.decode_delay_ms +
                            cfg_.options.decode_delay_slope_ms * static_cast<double>(work.context.size() - 1);

    lock.lock();
    if (!failure.empty()) {
      FailLocked(failure);
      return;
    }
    // Emulated cost; a rejection (epoch bump) preempts it.
    const auto deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double, std::milli>(std::max(0.0, emulated)));
    cv_.wait_until(lock, deadline, [&] { return halt_ || done_ || closing_ || epoch_ != epoch; });
    if (halt_ || done_ || closing_) return;
    if (epoch_ != epoch) continue;

    draft->decode_ms = NowMs() - start;
    costs_[Index(role_)].Observe(static_cast<double>(work.context.size() - 1), draft->decode_ms);
    decoder_ = std::move(work);
    Queue(role_).push_back(*draft);
    try {
      ch_.Send(ToWire(*draft));
    } catch (const std::exception& e) {
      FailLocked(std::string("send draft: ") + e.what());
      return;
    }
    cv_.notify_all();
  }
}

void Node::AggregateLoop() {
  std::unique_lock lock(mu_);
  while (true) {
    cv_.wait(lock, [&] { return halt_ || done_ || ReadyToAggregate(); });
    if (halt_ || done_) return;
    try {
      AggregateHead();
    } catch (const std::exception& e) {
      FailLocked(std::string("aggregate: ") + e.what() + DumpLocked());
      return;
    }
  }
}

void Node::AggregateHead() {
  const auto step = static_cast<std::uint32_t>(log_.size());
  const DraftRecord& dl = Queue(Side::kDevice).front();
  const DraftRecord& dr = Queue(Side::kCloud).front();
  if (dl.step != step || dr.step != step) {
    throw ProtocolError("queue heads at steps " + std::to_string(dl.step) + "/" + std::to_string(dr.step) +
                        " while aggregating step " + std::to_string(step));
  }
  const AggregationOutcome o = Aggregate(dl, dr, DrawsForStep(cfg_.session.seed, step), cfg_.session.gamma);
  const bool peer_accepted = peer_ == Side::kDevice ? o.accept_l : o.accept_r;
  ApplyOutcome(o);
  std::optional<Side> switch_to;
  if (!done_) switch_to = Decide();
  if (switch_to) {
    aggregator_ = *switch_to;
    ++result_.switches;
  }
  if (!peer_accepted) awaiting_echo_ = step;
  ch_.Send(transport::TargetMsg{step, o.target, o.accept_l, o.accept_r, switch_to});
  target_sent_at_[step] = NowMs();
  cv_.notify_all();
}

std::optional<Side> Node::Decide() {
  const auto& forced = cfg_.options.switch_after;
  if (std::find(forced.begin(), forced.end(), log_.size() - 1) != forced.end()) return peer_;
  if (cfg_.options.policy != AggregatorPolicy::kAuto) return std::nullopt;
  if (!costs_[0].ready() || !costs_[1].ready()) return std::nullopt;
  const double t = static_cast<double>(accepted_.size());
  const double rtt = link_.has_rtt() ? link_.latest_rtt() : 0.0;
  const CostVector costs{costs_[Index(role_)].Predict(t), costs_[Index(peer_)].Predict(t), rtt / 2.0, rtt / 2.0};
  if (ChooseSide(costs, acceptance_.From(role_)) == Placement::kRemote) return peer_;
  return std::nullopt;
}

void Node::ApplyOutcome(AggregationOutcome o) {
  if (o.step != log_.size()) {
    throw ProtocolError("outcome for step " + std::to_string(o.step) + ", expected " + std::to_string(log_.size()));
  }
  for (Side s : {Side::kDevice, Side::kCloud}) {
    if (Queue(s).empty() || Queue(s).front().step != o.step) {
      throw ProtocolError("no " + std::string(ToString(s)) + " draft for step " + std::to_string(o.step));
    }
  }
  const DraftRecord& dl = Queue(Side::kDevice).front();
  const DraftRecord& dr = Queue(Side::kCloud).front();
  const LogEta eta = EtaLogWeights(dl.h, dr.h);
  const double g = cfg_.session.gamma;
  acceptance_.Observe(Side::kDevice, ExpectedAcceptance(dl.dist, dr.dist, std::exp(eta.r), g));
  acceptance_.Observe(Side::kCloud, ExpectedAcceptance(dr.dist, dl.dist, std::exp(eta.l), 1.0 - g));

  // Not carried on the wire; dropped so both nodes log the same values.
  o.resampled_from = ResampledFrom::kNone;
  log_.push_back(o);
  accepted_.push_back(o.target);
  const double now = NowMs();
  if (log_.size() == 1) result_.ttft_ms = now - start_ms_;
  result_.metrics.push_back({o.step, o.target, o.accept_l, o.accept_r, now - last_append_ms_, aggregator_});
  result_.total_ms = now - start_ms_;
  last_append_ms_ = now;

  for (Side s : {Side::kDevice, Side::kCloud}) {
    const bool accepted = s == Side::kDevice ? o.accept_l : o.accept_r;
    auto& q = Queue(s);
    if (accepted) {
      q.pop_front();
      continue;
    }
    if (s == role_) {
      result_.discarded_drafts += q.size() - 1;  // the rejected head is not speculative
      ++result_.rollbacks;
      Rollback(decoder_, std::span<const TokenId>(accepted_).first(accepted_.size() - 1), o.target);
      ++epoch_;
    }
    q.clear();
  }
  if (log_.size() == cfg_.session.max_new_tokens) done_ = true;
  cv_.notify_all();
}

void Node::ReadLoop() {
  try {
    while (true) {
      auto m = ch_.Receive();
      std::lock_guard lock(mu_);
      if (!m) {
        if (!peer_bye_ && !done_) FailLocked("peer disconnected" + DumpLocked());
        break;
      }
      try {
        OnMessage(*m);
      } catch (const std::exception& e) {
        FailLocked(std::string("protocol: ") + e.what() + DumpLocked());
      }
      if (halt_ && !closing_) break;
    }
  } catch (const std::exception& e) {
    std::lock_guard lock(mu_);
    if (!done_) FailLocked(std::string("receive: ") + e.what());
  }
  std::lock_guard lock(mu_);
  reader_ended_ = true;
  cv_.notify_all();
}

void Node::OnMessage(const transport::Message& m) {
  if (std::holds_alternative<transport::ByeMsg>(m)) {
    peer_bye_ = true;
    cv_.notify_all();
    return;
  }
  if (closing_ || done_) return;

  if (const auto* d = std::get_if<transport::DraftMsg>(&m)) {
    if (awaiting_echo_) {
      ++result_.stale_remote_drafts;
      return;
    }
    DraftRecord rec = FromWire(*d, peer_);
    if (rec.dist.size() != cfg_.session.vocab_size) throw VocabMismatch("peer draft has a different vocabulary");
    auto& mirror = Queue(peer_);
    const std::size_t expected = mirror.empty() ? log_.size() : mirror.back().step + 1;
    if (rec.step != expected) {
      throw ProtocolError("draft for step " + std::to_string(rec.step) + ", expected " + std::to_string(expected));
    }
    costs_[Index(peer_)].Observe(static_cast<double>(cfg_.session.prompt.size() + rec.step), rec.decode_ms);
    mirror.push_back(std::move(rec));
    cv_.notify_all();
  } else if (const auto* t = std::get_if<transport::TargetMsg>(&m)) {
    if (aggregator_ == role_) throw ProtocolError("target received while this node aggregates");
    ApplyOutcome({t->target, t->accept_l, t->accept_r, t->step, ResampledFrom::kNone});
    if (t->switch_to) {
      if (*t->switch_to != role_) throw ProtocolError("switch names the current aggregator");
      aggregator_ = role_;
      ++result_.switches;
    }
    // The echo follows any rollback, so the aggregator can tell fresh drafts from stale ones.
    ch_.Send(transport::ProbeMsg{t->step, true, 0.0});
    ch_.Send(transport::ProbeMsg{t->step, false, NowMs()});
    cv_.notify_all();
  } else if (const auto* s = std::get_if<transport::SwitchMsg>(&m)) {
    if (aggregator_ == role_) throw ProtocolError("switch received while this node aggregates");
    if (s->step != log_.size()) throw ProtocolError("switch for step " + std::to_string(s->step));
    aggregator_ = s->to;
    cv_.notify_all();
  } else if (const auto* p = std::get_if<transport::ProbeMsg>(&m)) {
    const double now = NowMs();
    if (!p->echo) {
      ch_.Send(transport::ProbeMsg{p->step, true, p->origin_ms});
    } else if (p->origin_ms > 0.0) {
      link_.ObserveRtt(now - p->origin_ms);
    } else {
      if (auto it = target_sent_at_.find(p->step); it != target_sent_at_.end()) {
        link_.ObserveRtt(now - it->second);
        target_sent_at_.erase(it);
      }
      if (awaiting_echo_ && *awaiting_echo_ == p->step) awaiting_echo_.reset();
    }
  }
}

void Node::Shutdown() {
  const auto timeout = std::chrono::duration<double, std::milli>(cfg_.options.shutdown_timeout_ms);
  std::unique_lock lock(mu_);
  if (done_ && error_.empty()) {
    lock.unlock();
    try {
      ch_.Send(transport::ByeMsg{});
    } catch (const std::exception&) {
    }
    lock.lock();
    cv_.wait_for(lock, timeout, [&] { return peer_bye_ || reader_ended_; });
    lock.unlock();
    ch_.CloseWrite();
    lock.lock();
    cv_.wait_for(lock, timeout, [&] { return reader_ended_; });
  }
  if (!reader_ended_) {
    lock.unlock();
    ch_.Abort();
  }
}

}  // namespace

NodeResult RunNode(const NodeConfig& config, transport::Channel& channel) {
  Node node(config, channel);
  return node.Run();
}

void WriteMetricsCsv(std::ostream& out, const NodeResult& result) {
  out << "step,token,accept_l,accept_r,latency_ms\n";
  for (const auto& m : result.metrics) {
    out << m.step << ',' << m.token << ',' << (m.accept_l ? 1 : 0) << ',' << (m.accept_r ? 1 : 0) << ','
        << m.latency_ms << '\n';
  }
}

void WriteTargetLog(std::ostream& out, const std::vector<AggregationOutcome>& log) {
  for (const auto& o : log) {
    out << o.step << ' ' << o.target << ' ' << (o.accept_l ? 1 : 0) << ' ' << (o.accept_r ? 1 : 0) << '\n';
  }
}

}  // namespace dragon::runtime
