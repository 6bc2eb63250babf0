#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dragon/aggregator.h"
#include "dragon/profiler.h"
#include "dragon/scheduler.h"
#include "dragon/types.h"

namespace dragon::sim {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDefaultJitterPeriodS = 20.0 * kPi;

/// Network conditions added on top of the per-direction c_trans costs.
struct NetModel {
  double base_latency_ms = 0.0;
  double extra_latency_ms = 0.0;
  /// Unset: (base + extra) / 5.
  std::optional<double> jitter_amplitude_ms;
  double jitter_period_s = kDefaultJitterPeriodS;
  /// Bytes per ms; 0 means unlimited.
  double bandwidth = 0.0;

  double amplitude() const;
  /// Throws std::invalid_argument if the latency could go negative.
  void Validate() const;
};

/// base + extra + amplitude * sin(2 pi t / period), t in ms.
double InstantaneousLatency(const NetModel& net, double t_ms);

struct StepAcceptance {
  bool accept_l = false;  // device draft
  bool accept_r = false;  // cloud draft
  friend bool operator==(const StepAcceptance&, const StepAcceptance&) = default;
};

struct AcceptanceTrace {
  std::vector<StepAcceptance> steps;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
  friend bool operator==(const AcceptanceTrace&, const AcceptanceTrace&) = default;

  static AcceptanceTrace Constant(std::size_t n, bool accept_l, bool accept_r);
  /// Independent Bernoulli flags per side.
  static AcceptanceTrace Bernoulli(std::size_t n, double rate_l, double rate_r, std::uint64_t seed);
  static AcceptanceTrace FromLog(const std::vector<AggregationOutcome>& log);
  /// CSV with header step,accept_l,accept_r; steps must be 0,1,2,...
  static AcceptanceTrace ParseCsv(std::string_view text);
  static AcceptanceTrace LoadCsv(const std::filesystem::path& path);
  void WriteCsv(std::ostream& out) const;
  double Rate(Side side) const;
};

enum class StrategyKind { kDevice, kCloud, kRandom, kDragon };
StrategyKind ParseStrategy(std::string_view name);
std::string_view ToString(StrategyKind kind);

struct Strategy {
  StrategyKind kind = StrategyKind::kDevice;
  std::uint64_t seed = 0;  // random only
};

struct MessageSizes {
  double draft_bytes = 0.0;
  double target_bytes = 0.0;
  /// Encoded sizes of a draft carrying `kept` entries and of a target.
  static MessageSizes FromWire(std::size_t kept);
};

struct SimConfig {
  /// Physical orientation: l = device, r = cloud; c_trans_l is device -> cloud.
  CostVector costs;
  NetModel net;
  Strategy strategy;
  std::size_t queue_capacity = 8;
  /// Capacity 1: every step is aggregated before the next decode.
  bool vanilla = false;
  /// Start side for dragon and random.
  Side initial_aggregator = Side::kDevice;
  /// Per-step decode cost from a profiler fit, evaluated at prompt_len + step.
  std::optional<std::array<DecodeModel, 2>> decode_models;
  std::size_t prompt_len = 0;
  MessageSizes sizes;
  bool record_events = false;
};

enum class EventKind { kDecodeStart, kDecodeDone, kDraftArrive, kAggregate, kTargetArrive, kSwitch };
std::string_view ToString(EventKind kind);

struct EventRecord {
  double time = 0.0;
  EventKind kind = EventKind::kDecodeStart;
  Side side = Side::kDevice;  // where it happens
  std::uint32_t step = 0;
};

struct SimResult {
  double total_time = 0.0;
  std::vector<double> per_token;
  std::size_t switches = 0;
  std::vector<Side> side_history;  // aggregator of each step
  std::vector<EventRecord> events;

  /// Mean per-token latency over the second half of the run.
  double SteadyState() const;
};

SimResult Simulate(const AcceptanceTrace& trace, const SimConfig& config);
SimResult Simulate(const AcceptanceTrace& trace, const CostVector& costs, const NetModel& net, Strategy strategy);

/// Header: step,time_ms,latency_ms,aggregator
void WriteResultCsv(std::ostream& out, const SimResult& result);

struct SpeedupPoint {
  double c_dec_l = 0.0;
  double c_dec_r = 0.0;
  double rtt = 0.0;
  double alpha_r = 0.0;
  double empirical = 0.0;
  double theoretical = 0.0;
};

/// For every grid point: vanilla time over the time of a trace where the
/// remote (cloud) draft is accepted with probability alpha_r and the local
/// (device, aggregating) draft never is. rtt is split evenly.
std::vector<SpeedupPoint> SpeedupCurve(const std::vector<double>& c_dec_l, const std::vector<double>& c_dec_r,
                                       const std::vector<double>& rtt, const std::vector<double>& alpha_r,
                                       std::size_t tokens, std::uint64_t seed);

/// Header: c_dec_l,c_dec_r,rtt,alpha_r,empirical,theoretical
void WriteSpeedupCsv(std::ostream& out, const std::vector<SpeedupPoint>& points);

}  // namespace dragon::sim
