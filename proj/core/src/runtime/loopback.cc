#include "dragon/runtime/loopback.h"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace dragon::runtime {

transport::DelayFn MakeDelay(double ms, double amplitude_ms, double period_ms) {
  if (ms < 0.0 || amplitude_ms < 0.0 || amplitude_ms > ms) throw std::invalid_argument("bad injected delay");
  if (ms == 0.0) return {};
  if (amplitude_ms == 0.0) return [ms](double) { return ms; };
  if (!(period_ms > 0.0)) throw std::invalid_argument("jitter period must be positive");
  const double t0 = transport::NowMs();
  return [=](double now) { return ms + amplitude_ms * std::sin(2.0 * 3.14159265358979323846 * (now - t0) / period_ms); };
}

PairResult RunLoopbackPair(const NodeConfig& device, const NodeConfig& cloud, const LinkOptions& link) {
  if (device.role != Side::kDevice || cloud.role != Side::kCloud) throw std::invalid_argument("roles must be device/cloud");
  transport::Listener listener(transport::Endpoint{"127.0.0.1", 0});
  const transport::Endpoint at{"127.0.0.1", listener.port()};
  PairResult out;
  std::thread cloud_thread([&] {
    try {
      transport::Channel ch(listener.Accept(), {link.codec, link.cloud_to_device});
      out.cloud = RunNode(cloud, ch);
    } catch (const std::exception& e) {
      out.cloud.error = std::string("cloud: ") + e.what();
    }
  });
  try {
    transport::Channel ch(transport::Connect(at), {link.codec, link.device_to_cloud});
    out.device = RunNode(device, ch);
  } catch (const std::exception& e) {
    out.device.error = std::string("device: ") + e.what();
  }
  cloud_thread.join();
  return out;
}

}  // namespace dragon::runtime
