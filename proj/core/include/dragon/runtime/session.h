#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "dragon/aggregator.h"
#include "dragon/decoder.h"
#include "dragon/retrieval.h"
#include "dragon/transport/wire.h"

namespace dragon::runtime {

inline constexpr double kDefaultWireTopP = 0.8;

/// Parameters both nodes must agree on. A mismatch changes the output.
struct SessionConfig {
  std::vector<TokenId> prompt;
  std::size_t vocab_size = 0;
  std::size_t docs = 2;  // retrieved per side
  std::size_t max_new_tokens = 20;
  std::size_t max_context = 256;
  std::size_t window = kDefaultChunkSize;
  std::uint64_t seed = 0;
  double top_p = kDefaultWireTopP;
  double gamma = kDefaultGamma;  // device-side selection weight
};

/// Throws std::invalid_argument on an unusable configuration.
void Validate(const SessionConfig& session);

struct SideSetup {
  std::shared_ptr<const Corpus> corpus;
  RetrievalHalf half = RetrievalHalf::kAll;
};

/// Default split: device takes the second block of K results, cloud the first.
RetrievalHalf DefaultHalf(Side side);

/// Retrieval with the prompt as query, then the decoder for one side.
DecoderState BuildDecoderState(const SessionConfig& session, const SideSetup& setup);

transport::DraftMsg ToWire(const DraftRecord& d);
DraftRecord FromWire(const transport::DraftMsg& m, Side side);

struct SequentialResult {
  std::vector<AggregationOutcome> log;
  std::vector<DraftRecord> device_drafts;  // one per step
  std::vector<DraftRecord> cloud_drafts;
};

/// Single-threaded reference: both decoders run in lockstep from the
/// accepted prefix and every step is aggregated with the step-indexed draws.
SequentialResult RunSequential(const SessionConfig& session, const SideSetup& device, const SideSetup& cloud);

std::vector<TokenId> Tokens(const std::vector<AggregationOutcome>& log);

}  // namespace dragon::runtime
