#include "dragon/scheduler.h"

#include <algorithm>
#include <stdexcept>

namespace dragon {

double Phi(double total, double begin, double now) { return std::max(0.0, total + begin - now); }

double LatencyPerToken(Placement where, const CostVector& costs, const AcceptanceEstimate& acc) {
  const CostVector c = where == Placement::kLocal ? costs : costs.Swapped();
  const double alpha_remote = where == Placement::kLocal ? acc.alpha_r : acc.alpha_l;
  const double rtt = c.rtt();
  return alpha_remote * std::max(c.c_dec_l, c.c_dec_r) + (1.0 - alpha_remote) * std::max(c.c_dec_l, c.c_dec_r + rtt);
}

double DeltaZ(const CostVector& costs, const AcceptanceEstimate& acc) {
  const double rtt = costs.rtt();
  const double cl = costs.c_dec_l;
  const double cr = costs.c_dec_r;
  const double j = cr - cl;
  if (cl <= cr - rtt) return (1.0 - acc.alpha_r) * rtt;
  if (cl <= cr) return (1.0 - acc.alpha_l) * j + (acc.alpha_l - acc.alpha_r) * rtt;
  if (cl <= cr + rtt) return (1.0 - acc.alpha_r) * j + (acc.alpha_l - acc.alpha_r) * rtt;
  return (acc.alpha_l - 1.0) * rtt;
}

Placement ChooseSide(const CostVector& costs, const AcceptanceEstimate& acc) {
  return DeltaZ(costs, acc) > 0.0 ? Placement::kRemote : Placement::kLocal;
}

double TheoreticalSpeedup(const CostVector& costs, double alpha_r) {
  const double rtt = costs.rtt();
  const double cl = costs.c_dec_l;
  const double cr = costs.c_dec_r;
  double inverse = 1.0;
  if (cl <= cr) {
    // 1 - a / (1 + c_r / rtt), written so rtt = 0 needs no special case.
    if (cr + rtt > 0.0) inverse = 1.0 - alpha_r * rtt / (cr + rtt);
  } else if (cl <= cr + rtt) {
    inverse = 1.0 - (1.0 - cl / (cr + rtt)) * alpha_r;
  }
  return 1.0 / inverse;
}

AcceptanceTracker::AcceptanceTracker(double weight, double initial) : weight_(weight), rates_{initial, initial} {
  if (!(weight > 0.0 && weight <= 1.0)) throw std::invalid_argument("EMA weight must be in (0, 1]");
}

void AcceptanceTracker::Observe(Side side, double value) {
  double& r = rates_[Index(side)];
  r = std::clamp((1.0 - weight_) * r + weight_ * value, 0.0, 1.0);
}

AcceptanceEstimate AcceptanceTracker::From(Side aggregator) const {
  return {rates_[Index(aggregator)], rates_[Index(Other(aggregator))]};
}

}  // namespace dragon
