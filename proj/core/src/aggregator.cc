#include "dragon/aggregator.h"

#include <cmath>
#include <limits>
#include <string>

#include "dragon/random.h"

namespace dragon {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Mass of max(0, p_b - p_a) at token x, from log values.
double PositivePart(double lb, double la) {
  if (lb == kNegInf || lb <= la) return 0.0;
  if (la == kNegInf) return std::exp(lb);
  return std::exp(lb) * -std::expm1(la - lb);
}

TokenId SampleAdjusted(const LogDist& p_a, const LogDist& p_b, double u) {
  const auto la = p_a.log_probs();
  const auto lb = p_b.log_probs();
  double total = 0.0;
  for (std::size_t x = 0; x < la.size(); ++x) total += PositivePart(lb[x], la[x]);
  if (!(total > 0.0)) throw std::logic_error("adjusted distribution has no mass after a rejection");
  const double target = u * total;
  double cumulative = 0.0;
  TokenId last = 0;
  for (std::size_t x = 0; x < la.size(); ++x) {
    const double m = PositivePart(lb[x], la[x]);
    if (m <= 0.0) continue;
    cumulative += m;
    last = static_cast<TokenId>(x);
    if (target < cumulative) return last;
  }
  return last;
}

}  // namespace

AggregationDraws DrawsForStep(std::uint64_t seed, std::uint32_t step) {
  const std::uint64_t base = static_cast<std::uint64_t>(step) * 8;
  return {UniformAt(seed, streams::kAggregation, base + 0), UniformAt(seed, streams::kAggregation, base + 1),
          UniformAt(seed, streams::kAggregation, base + 2), UniformAt(seed, streams::kAggregation, base + 3),
          UniformAt(seed, streams::kAggregation, base + 4)};
}

SampleResult SpeculativeSampleDetailed(TokenId x, const LogDist& p_a, const LogDist& p_b, double eta,
                                       double u_reject, double u_resample) {
  if (p_a.size() != p_b.size()) throw VocabMismatch("speculative sample over different vocabularies");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::domain_error("eta must lie in [0, 1]");
  const double la = p_a.LogProb(x);
  const double lb = p_b.LogProb(x);
  if (la == kNegInf) throw std::domain_error("draft token has zero probability under its own distribution");
  if (la > lb) {
    const double reject_prob = eta * -std::expm1(lb - la);
    if (u_reject < reject_prob) return {SampleAdjusted(p_a, p_b, u_resample), true};
  }
  return {x, false};
}

AggregationOutcome Aggregate(const DraftRecord& draft_l, const DraftRecord& draft_r, const AggregationDraws& draws,
                             double gamma_l) {
  if (draft_l.step != draft_r.step) {
    throw ProtocolError("aggregating drafts of different steps: " + std::to_string(draft_l.step) + " vs " +
                        std::to_string(draft_r.step));
  }
  if (draft_l.dist.size() != draft_r.dist.size()) throw VocabMismatch("drafts use different vocabularies");
  const LogEta log_eta = EtaLogWeights(draft_l.h, draft_r.h);
  const double eta_l = std::exp(log_eta.l);
  const double eta_r = std::exp(log_eta.r);

  const auto from_l = SpeculativeSampleDetailed(draft_l.token, draft_l.dist, draft_r.dist, eta_r, draws.reject_l,
                                                draws.resample_l);
  const auto from_r = SpeculativeSampleDetailed(draft_r.token, draft_r.dist, draft_l.dist, eta_l, draws.reject_r,
                                                draws.resample_r);

  AggregationOutcome out;
  out.step = draft_l.step;
  if (draws.select <= gamma_l) {
    out.target = from_l.token;
    out.resampled_from = from_l.resampled ? ResampledFrom::kAdjustedL : ResampledFrom::kNone;
  } else {
    out.target = from_r.token;
    out.resampled_from = from_r.resampled ? ResampledFrom::kAdjustedR : ResampledFrom::kNone;
  }
  out.accept_l = draft_l.token == out.target;
  out.accept_r = draft_r.token == out.target;
  return out;
}

double ExpectedAcceptance(const LogDist& p_l, const LogDist& p_r, double eta_r, double gamma_l) {
  if (!(eta_r >= 0.0 && eta_r <= 1.0) || !(gamma_l >= 0.0 && gamma_l <= 1.0)) {
    throw std::domain_error("weights must lie in [0, 1]");
  }
  if (p_l.size() != p_r.size()) throw VocabMismatch("expected acceptance over different vocabularies");
  const double delta = LkDivergence(p_l, p_r);
  const double eta_l = 1.0 - eta_r;
  double cross = 0.0;
  for (std::size_t x = 0; x < p_l.size(); ++x) {
    const double pl = p_l.Prob(x);
    cross += pl * (eta_l * pl + eta_r * p_r.Prob(x));
  }
  return gamma_l * (1.0 - eta_r * delta) + (1.0 - gamma_l) * cross;
}

}  // namespace dragon
