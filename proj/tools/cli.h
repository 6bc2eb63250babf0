#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dragon/runtime/node.h"
#include "dragon/sim/simulator.h"

namespace dragon::tools {

/// Exit codes: 0 ok, 1 usage or validation error, 2 runtime failure
/// (peer, protocol, failed verification).
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// "3 4 5" or "3,4,5".
std::vector<TokenId> ParseTokenList(const std::string& text);

struct SessionArgs {
  std::string corpus;
  std::size_t chunk = kDefaultChunkSize;
  std::size_t docs = 2;
  std::size_t max_new_tokens = 20;
  std::size_t vocab = 0;  // 0: derived from corpus and prompt
  std::string prompt;     // empty: first 8 tokens of the first document
  double top_p = runtime::kDefaultWireTopP;
};

/// Loads the corpus and fills a validated session (seed included).
struct LoadedSession {
  std::shared_ptr<const Corpus> corpus;
  runtime::SessionConfig session;
};
LoadedSession LoadSession(const SessionArgs& args, std::uint64_t seed);

struct NodeArgs {
  std::string role;
  std::string listen;
  std::string connect;
  std::string half;  // empty: role default
  bool vanilla = false;
  std::string static_side = "device";
  std::string codec = "none";
  std::size_t queue_capacity = runtime::kDefaultQueueCapacity;
  double decode_ms = 0.0;
  double decode_slope_ms = 0.0;
  double delay_ms = 0.0;
  double jitter_ms = 0.0;
  double jitter_period_ms = 20000.0;
  double timeout_ms = 30000.0;
  std::string port_file;
  std::string log_out;  // target log path; empty: stdout
};

/// Throws std::invalid_argument on bad combinations.
void Validate(const NodeArgs& args);

struct SimulateArgs {
  std::string trace;
  std::optional<double> bernoulli;  // cloud acceptance; device drafts never accepted
  double bernoulli_device = 0.0;
  std::string strategy = "device";
  std::size_t tokens = 100;
  double c_dec_l = 1.0;
  double c_dec_r = 1.5;
  double c_trans_l = 0.75;
  double c_trans_r = 0.75;
  double base_latency = 0.0;
  double extra_latency = 0.0;
  std::optional<double> jitter_amplitude;
  double jitter_period_s = sim::kDefaultJitterPeriodS;
  double bandwidth = 0.0;
  std::size_t queue_capacity = 8;
  bool vanilla = false;
  std::string initial = "device";
};

void Validate(const SimulateArgs& args);
sim::SimConfig MakeSimConfig(const SimulateArgs& args, std::uint64_t seed);
sim::AcceptanceTrace MakeTrace(const SimulateArgs& args, std::uint64_t seed);

}  // namespace dragon::tools
