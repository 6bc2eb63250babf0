#pragma once

#include <array>

#include "dragon/types.h"

namespace dragon {

/// Costs seen from the side that currently aggregates (l) and the other side (r).
/// All values in milliseconds.
struct CostVector {
  double c_dec_l = 0.0;
  double c_dec_r = 0.0;
  double c_trans_l = 0.0;  // l -> r
  double c_trans_r = 0.0;  // r -> l

  double rtt() const { return c_trans_l + c_trans_r; }
  /// Same costs seen from the other side.
  CostVector Swapped() const { return {c_dec_r, c_dec_l, c_trans_r, c_trans_l}; }
};

/// Moving-average acceptance rates of l's and r's drafts.
struct AcceptanceEstimate {
  double alpha_l = 1.0;
  double alpha_r = 1.0;

  AcceptanceEstimate Swapped() const { return {alpha_r, alpha_l}; }
};

/// Aggregation placement relative to the current aggregator.
enum class Placement { kLocal, kRemote };

/// Remaining part of a process of length `total` that began at `begin`.
double Phi(double total, double begin, double now);

/// Expected per-token latency if `where` keeps aggregating:
/// Z^l = a_r max(c_l, c_r) + (1 - a_r) max(c_l, c_r + rtt); Z^r by symmetry.
double LatencyPerToken(Placement where, const CostVector& costs, const AcceptanceEstimate& acc);

/// Z^l - Z^r as the four-branch closed form; positive means r is faster.
double DeltaZ(const CostVector& costs, const AcceptanceEstimate& acc);

/// kRemote if DeltaZ > 0, kLocal otherwise (ties keep the current side).
Placement ChooseSide(const CostVector& costs, const AcceptanceEstimate& acc);

/// Vanilla-over-speculative latency ratio with l = device aggregating.
double TheoreticalSpeedup(const CostVector& costs, double alpha_r);

inline constexpr double kAcceptanceEmaWeight = 0.2;
inline constexpr double kAcceptanceEmaInit = 1.0;

/// Per physical side exponential moving average of acceptance, starting
/// optimistic at 1.
class AcceptanceTracker {
 public:
  explicit AcceptanceTracker(double weight = kAcceptanceEmaWeight, double initial = kAcceptanceEmaInit);

  void Observe(Side side, double value);
  double rate(Side side) const { return rates_[Index(side)]; }
  /// Estimate oriented so that `aggregator` is l.
  AcceptanceEstimate From(Side aggregator) const;

 private:
  double weight_;
  std::array<double, 2> rates_;
};

}  // namespace dragon
