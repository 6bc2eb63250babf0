#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace dragon {

/// c_dec(t) = k_a * t / k_b + k_c, in milliseconds. Numerator and denominator
/// of the slope are kept apart because the runtime update blends each of them.
struct DecodeModel {
  double k_a = 0.0;
  double k_b = 1.0;
  double k_c = 0.0;

  double slope() const { return k_a / k_b; }
  /// Clamped at zero.
  double Predict(double t) const;
};

struct DecodeSample {
  double t;
  double c_dec;
};

/// Ordinary least squares over (t, c_dec); k_b is 1 after fitting. Needs two
/// distinct t values.
DecodeModel FitOffline(std::span<const DecodeSample> samples);

/// Slope re-estimate with the intercept frozen:
/// ((1-z) k_a + z (c_obs - k_c) t) / ((1-z) k_b + z t^2).
DecodeModel UpdateRuntime(const DecodeModel& model, double t, double c_obs, double zeta);

inline constexpr double kDefaultZeta = 0.3;

enum class Direction { kSend, kRecv };

/// Round-trip latency plus per-direction bandwidth (bytes per ms).
struct LinkModel {
  double latency_ms = 0.0;
  double bandwidth_send = 1e9;
  double bandwidth_recv = 1e9;
};

/// L + g / B for the chosen direction.
double EstimateTrans(const LinkModel& link, double bytes, Direction dir = Direction::kSend);

/// Averages `reps` runs of `measure(t)` at each t in [first, last) and fits
/// the result.
struct OfflineProfile {
  std::vector<DecodeSample> averaged;
  DecodeModel model;
};
OfflineProfile ProfileOffline(const std::function<double(std::size_t)>& measure, std::size_t first, std::size_t last,
                              std::size_t reps = 3);

/// Runtime link estimate fed by echo round-trips and byte counts. Keeps the
/// latest RTT sample next to a slower historical average.
class LinkEstimator {
 public:
  explicit LinkEstimator(double history_weight = 0.1) : history_weight_(history_weight) {}

  void ObserveRtt(double rtt_ms);
  /// Folds one throughput sample (bytes counted over `elapsed_ms`) into the
  /// bandwidth average.
  void ObserveBytes(double bytes, double elapsed_ms);

  double latest_rtt() const { return latest_rtt_; }
  double historical_rtt() const { return historical_rtt_; }
  std::optional<double> bandwidth() const { return bandwidth_; }
  bool has_rtt() const { return samples_ > 0; }
  LinkModel Model() const;

 private:
  double history_weight_;
  double latest_rtt_ = 0.0;
  double historical_rtt_ = 0.0;
  std::size_t samples_ = 0;
  std::optional<double> bandwidth_;
};

/// One profiling row: step, observed and predicted decode delay, observed
/// RTT and bandwidth.
struct ProfileRow {
  std::size_t t = 0;
  double c_dec_obs = 0.0;
  double c_dec_pred = 0.0;
  double rtt_obs = 0.0;
  double bw_obs = 0.0;
};

void WriteProfileCsv(std::ostream& out, std::span<const ProfileRow> rows);

}  // namespace dragon
