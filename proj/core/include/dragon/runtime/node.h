#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dragon/aggregator.h"
#include "dragon/runtime/session.h"
#include "dragon/transport/channel.h"

namespace dragon::runtime {

enum class AggregatorPolicy { kDevice, kCloud, kAuto };
AggregatorPolicy ParseAggregatorPolicy(std::string_view name);

inline constexpr std::size_t kDefaultQueueCapacity = 8;

struct NodeOptions {
  /// Aggregate each step before decoding the next one.
  bool vanilla = false;
  /// Static placement, or kAuto to let the scheduler move the aggregator.
  /// kAuto starts on the device.
  AggregatorPolicy policy = AggregatorPolicy::kDevice;
  std::size_t queue_capacity = kDefaultQueueCapacity;
  /// Emulated decode cost: decode_delay_ms + decode_delay_slope_ms * context length.
  double decode_delay_ms = 0.0;
  double decode_delay_slope_ms = 0.0;
  double shutdown_timeout_ms = 10000.0;
  /// Forced hand-offs: the aggregator passes the role on after these steps.
  std::vector<std::uint32_t> switch_after;
};

struct NodeConfig {
  Side role = Side::kDevice;
  SessionConfig session;
  SideSetup setup;
  NodeOptions options;
};

struct TokenMetric {
  std::uint32_t step = 0;
  TokenId token = 0;
  bool accept_l = false;
  bool accept_r = false;
  double latency_ms = 0.0;  // since the previous append (the first one: since query receipt)
  Side aggregator = Side::kDevice;
};

struct NodeResult {
  std::vector<AggregationOutcome> log;
  std::vector<TokenMetric> metrics;
  double ttft_ms = 0.0;
  double total_ms = 0.0;
  bool completed = false;
  std::string error;
  std::size_t rollbacks = 0;
  std::size_t discarded_drafts = 0;     // own drafts queued behind a rejected one
  std::size_t stale_remote_drafts = 0;  // remote drafts dropped while awaiting an echo
  std::size_t switches = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
};

/// Runs one side of a session over an established channel. Never throws for
/// peer or protocol failures: those end the run with completed=false, the
/// partial log and a diagnostic in `error`.
NodeResult RunNode(const NodeConfig& config, transport::Channel& channel);

/// Header: step,token,accept_l,accept_r,latency_ms
void WriteMetricsCsv(std::ostream& out, const NodeResult& result);
/// One line per target: "step token accept_l accept_r".
void WriteTargetLog(std::ostream& out, const std::vector<AggregationOutcome>& log);

}  // namespace dragon::runtime
