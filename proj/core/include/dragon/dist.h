#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "dragon/types.h"

namespace dragon {

/// Dense vocabulary; token ids are 0..size-1.
class Vocab {
 public:
  explicit Vocab(std::size_t size) : size_(size) {
    if (size < 2) throw std::invalid_argument("vocabulary needs at least two tokens");
  }
  std::size_t size() const { return size_; }
  bool Contains(TokenId id) const { return id < size_; }
  friend bool operator==(Vocab, Vocab) = default;

 private:
  std::size_t size_;
};

/// Two distributions (or a distribution and a token) disagree on the vocabulary.
class VocabMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Natural-log probabilities over a vocabulary. Normalized on construction:
/// logsumexp(logp) == 0 within 1e-6, no NaN, -inf allowed.
class LogDist {
 public:
  /// Validates that `logp` is already normalized.
  static LogDist FromLogProbs(std::vector<double> logp);
  /// Shifts arbitrary finite/-inf log weights so they normalize.
  static LogDist Normalize(std::vector<double> log_weights);
  /// Builds from non-negative linear weights (tests and oracles).
  static LogDist FromWeights(std::span<const double> weights);
  static LogDist OneHot(Vocab vocab, TokenId token);
  static LogDist Uniform(Vocab vocab);

  Vocab vocab() const { return Vocab(logp_.size()); }
  std::size_t size() const { return logp_.size(); }
  double LogProb(TokenId id) const { return logp_.at(id); }
  double Prob(TokenId id) const;
  std::span<const double> log_probs() const { return logp_; }
  /// Linear-space copy; oracle and sampling use only.
  std::vector<double> Probs() const;

  friend bool operator==(const LogDist&, const LogDist&) = default;

 private:
  explicit LogDist(std::vector<double> logp) : logp_(std::move(logp)) {}
  std::vector<double> logp_;
};

/// log of the sum of a side's exp(relevance) terms.
struct CorrectedWeight {
  double hlog = 0.0;
  friend bool operator==(const CorrectedWeight&, const CorrectedWeight&) = default;
};

struct LogEta {
  double l;
  double r;
};

/// Returns -inf for an empty or all -inf input.
double LogSumExp(std::span<const double> values);

/// log softmax([h_l, h_r]). Throws std::domain_error on non-finite input.
LogEta EtaLogWeights(CorrectedWeight h_l, CorrectedWeight h_r);

/// log(eta_l * p_l + eta_r * p_r), computed in log space.
LogDist InterpolateTarget(const LogDist& p_l, const LogDist& p_r, CorrectedWeight h_l, CorrectedWeight h_r);
LogDist InterpolateTarget(const LogDist& p_l, const LogDist& p_r, LogEta eta);

/// 1 - sum_x min(p_l(x), p_r(x)), clamped to [0, 1].
double LkDivergence(const LogDist& p_l, const LogDist& p_r);

/// Sum over x of |p(x) - q(x)| / 2.
double TotalVariation(const LogDist& p, const LogDist& q);

/// Inverse-CDF draw over ascending token id. `u` in [0, 1).
TokenId SampleInverseCdf(const LogDist& p, double u);

}  // namespace dragon
