#pragma once

#include <cstdint>

#include "dragon/decoder.h"
#include "dragon/dist.h"

namespace dragon {

inline constexpr double kDefaultGamma = 0.5;

enum class ResampledFrom : std::uint8_t { kNone = 0, kAdjustedL = 1, kAdjustedR = 2 };

/// Result of one aggregation step. `l` and `r` follow the argument order of
/// Aggregate(), not the node that ran it.
struct AggregationOutcome {
  TokenId target = 0;
  bool accept_l = false;
  bool accept_r = false;
  std::uint32_t step = 0;
  ResampledFrom resampled_from = ResampledFrom::kNone;

  friend bool operator==(const AggregationOutcome&, const AggregationOutcome&) = default;
};

/// All randomness consumed by one Aggregate() call.
struct AggregationDraws {
  double reject_l = 0.0;
  double resample_l = 0.0;
  double reject_r = 0.0;
  double resample_r = 0.0;
  double select = 0.0;
};

/// Step-indexed draws from the counter-based stream.
AggregationDraws DrawsForStep(std::uint64_t seed, std::uint32_t step);

struct SampleResult {
  TokenId token;
  bool resampled;
};

/// Keeps `x` unless p_a(x) > p_b(x) and u_reject < eta * (1 - p_b(x)/p_a(x)); a
/// rejected draw is replaced by an inverse-CDF sample of norm(max(0, p_b - p_a)).
SampleResult SpeculativeSampleDetailed(TokenId x, const LogDist& p_a, const LogDist& p_b, double eta,
                                       double u_reject, double u_resample);

inline TokenId SpeculativeSample(TokenId x, const LogDist& p_a, const LogDist& p_b, double eta, double u_reject,
                                 double u_resample) {
  return SpeculativeSampleDetailed(x, p_a, p_b, eta, u_reject, u_resample).token;
}

/// Speculative aggregation of one pair of drafts. The selected token follows
/// eta_l * p_l + eta_r * p_r; a draft is accepted iff it equals the target.
/// Throws ProtocolError on a step mismatch and VocabMismatch on differing
/// vocabularies.
AggregationOutcome Aggregate(const DraftRecord& draft_l, const DraftRecord& draft_r, const AggregationDraws& draws,
                             double gamma_l = kDefaultGamma);

/// Expected acceptance rate of side-l drafts:
/// gamma_l * (1 - eta_r * delta) + (1 - gamma_l) * sum_x p_l(x) p_t(x).
double ExpectedAcceptance(const LogDist& p_l, const LogDist& p_r, double eta_r, double gamma_l = kDefaultGamma);

}  // namespace dragon
