#include "dragon/profiler.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dragon {

double DecodeModel::Predict(double t) const { return std::max(0.0, k_a * t / k_b + k_c); }

DecodeModel FitOffline(std::span<const DecodeSample> samples) {
  if (samples.size() < 2) throw std::invalid_argument("fit needs at least two samples");
  double mean_t = 0.0;
  double mean_c = 0.0;
  for (const auto& s : samples) {
    mean_t += s.t;
    mean_c += s.c_dec;
  }
  mean_t /= static_cast<double>(samples.size());
  mean_c /= static_cast<double>(samples.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& s : samples) {
    sxx += (s.t - mean_t) * (s.t - mean_t);
    sxy += (s.t - mean_t) * (s.c_dec - mean_c);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit needs at least two distinct t values");
  const double slope = sxy / sxx;
  return {slope, 1.0, mean_c - slope * mean_t};
}

DecodeModel UpdateRuntime(const DecodeModel& model, double t, double c_obs, double zeta) {
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("zeta must lie in [0, 1]");
  const double numerator = (1.0 - zeta) * model.k_a + zeta * (c_obs - model.k_c) * t;
  const double denominator = (1.0 - zeta) * model.k_b + zeta * t * t;
  if (denominator == 0.0) throw std::domain_error("slope update with a zero denominator");
  return {numerator, denominator, model.k_c};
}

double EstimateTrans(const LinkModel& link, double bytes, Direction dir) {
  if (bytes < 0.0) throw std::invalid_argument("data size must be non-negative");
  const double bw = dir == Direction::kSend ? link.bandwidth_send : link.bandwidth_recv;
  return link.latency_ms + bytes / bw;
}

OfflineProfile ProfileOffline(const std::function<double(std::size_t)>& measure, std::size_t first, std::size_t last,
                              std::size_t reps) {
  if (reps == 0) throw std::invalid_argument("need at least one repetition");
  OfflineProfile out;
  for (std::size_t t = first; t < last; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < reps; ++i) acc += measure(t);
    out.averaged.push_back({static_cast<double>(t), acc / static_cast<double>(reps)});
  }
  out.model = FitOffline(out.averaged);
  return out;
}

void LinkEstimator::ObserveRtt(double rtt_ms) {
  if (!(rtt_ms >= 0.0) || !std::isfinite(rtt_ms)) return;
  latest_rtt_ = rtt_ms;
  historical_rtt_ = samples_ == 0 ? rtt_ms : (1.0 - history_weight_) * historical_rtt_ + history_weight_ * rtt_ms;
  ++samples_;
}

void LinkEstimator::ObserveBytes(double bytes, double elapsed_ms) {
  if (!(elapsed_ms > 0.0) || !(bytes > 0.0)) return;
  const double bw = bytes / elapsed_ms;
  bandwidth_ = bandwidth_ ? (1.0 - history_weight_) * *bandwidth_ + history_weight_ * bw : bw;
}

LinkModel LinkEstimator::Model() const {
  LinkModel m;
  m.latency_ms = latest_rtt_;
  if (bandwidth_) m.bandwidth_send = m.bandwidth_recv = *bandwidth_;
  return m;
}

void WriteProfileCsv(std::ostream& out, std::span<const ProfileRow> rows) {
  out << "t,c_dec_obs,c_dec_pred,rtt_obs,bw_obs\n";
  for (const auto& r : rows) {
    out << r.t << ',' << r.c_dec_obs << ',' << r.c_dec_pred << ',' << r.rtt_obs << ',' << r.bw_obs << '\n';
  }
}

}  // namespace dragon
