#include "dragon/dist.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dragon {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNormTolerance = 1e-6;

void RequireSameVocab(const LogDist& a, const LogDist& b) {
  if (a.size() != b.size()) {
    throw VocabMismatch("vocabulary mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

// log(exp(a) + exp(b)) without overflow.
double LogAddExp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

double LogSumExp(std::span<const double> values) {
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  if (std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

LogDist LogDist::FromLogProbs(std::vector<double> logp) {
  (void)Vocab(logp.size());
  for (double v : logp) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw std::domain_error("log-probabilities must not be NaN or +inf");
    }
  }
  const double total = LogSumExp(logp);
  if (!(std::abs(total) <= kNormTolerance)) {
    throw std::domain_error("log-probabilities are not normalized (logsumexp = " + std::to_string(total) + ")");
  }
  return LogDist(std::move(logp));
}

LogDist LogDist::Normalize(std::vector<double> log_weights) {
  (void)Vocab(log_weights.size());
  for (double v : log_weights) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw std::domain_error("log weights must not be NaN or +inf");
    }
  }
  const double total = LogSumExp(log_weights);
  if (total == kNegInf) throw std::domain_error("distribution has zero mass");
  for (double& v : log_weights) v -= total;
  return LogDist(std::move(log_weights));
}

LogDist LogDist::FromWeights(std::span<const double> weights) {
  std::vector<double> logw(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || std::isinf(weights[i])) throw std::domain_error("weights must be finite and >= 0");
    logw[i] = weights[i] > 0.0 ? std::log(weights[i]) : kNegInf;
  }
  return Normalize(std::move(logw));
}

LogDist LogDist::OneHot(Vocab vocab, TokenId token) {
  if (!vocab.Contains(token)) throw std::out_of_range("token outside vocabulary");
  std::vector<double> logp(vocab.size(), kNegInf);
  logp[token] = 0.0;
  return LogDist(std::move(logp));
}

LogDist LogDist::Uniform(Vocab vocab) {
  return LogDist(std::vector<double>(vocab.size(), -std::log(static_cast<double>(vocab.size()))));
}

double LogDist::Prob(TokenId id) const { return std::exp(logp_.at(id)); }

std::vector<double> LogDist::Probs() const {
  std::vector<double> p(logp_.size());
  std::transform(logp_.begin(), logp_.end(), p.begin(), [](double v) { return std::exp(v); });
  return p;
}

LogEta EtaLogWeights(CorrectedWeight h_l, CorrectedWeight h_r) {
  if (!std::isfinite(h_l.hlog) || !std::isfinite(h_r.hlog)) {
    throw std::domain_error("corrected weights must be finite");
  }
  const double total = LogAddExp(h_l.hlog, h_r.hlog);
  return {h_l.hlog - total, h_r.hlog - total};
}

LogDist InterpolateTarget(const LogDist& p_l, const LogDist& p_r, CorrectedWeight h_l, CorrectedWeight h_r) {
  return InterpolateTarget(p_l, p_r, EtaLogWeights(h_l, h_r));
}

LogDist InterpolateTarget(const LogDist& p_l, const LogDist& p_r, LogEta eta) {
  RequireSameVocab(p_l, p_r);
  const auto a = p_l.log_probs();
  const auto b = p_r.log_probs();
  std::vector<double> out(a.size());
  for (std::size_t x = 0; x < a.size(); ++x) out[x] = LogAddExp(a[x] + eta.l, b[x] + eta.r);
  // Renormalize away the rounding drift of the two log terms.
  return LogDist::Normalize(std::move(out));
}

double LkDivergence(const LogDist& p_l, const LogDist& p_r) {
  RequireSameVocab(p_l, p_r);
  const auto a = p_l.log_probs();
  const auto b = p_r.log_probs();
  double overlap = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) overlap += std::exp(std::min(a[x], b[x]));
  return std::clamp(1.0 - overlap, 0.0, 1.0);
}

double TotalVariation(const LogDist& p, const LogDist& q) {
  RequireSameVocab(p, q);
  double acc = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) acc += std::abs(p.Prob(x) - q.Prob(x));
  return 0.5 * acc;
}

TokenId SampleInverseCdf(const LogDist& p, double u) {
  const auto lp = p.log_probs();
  double cumulative = 0.0;
  TokenId last_supported = 0;
  for (std::size_t x = 0; x < lp.size(); ++x) {
    if (lp[x] == kNegInf) continue;
    cumulative += std::exp(lp[x]);
    last_supported = static_cast<TokenId>(x);
    if (u < cumulative) return last_supported;
  }
  // u landed in the rounding gap above the accumulated mass.
  return last_supported;
}

}  // namespace dragon
