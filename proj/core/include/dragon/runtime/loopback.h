#pragma once

#include <utility>

#include "dragon/runtime/node.h"
#include "dragon/transport/channel.h"

namespace dragon::runtime {

struct LinkOptions {
  transport::Codec codec = transport::Codec::kNone;
  transport::DelayFn device_to_cloud;  // injected one-way delay per direction
  transport::DelayFn cloud_to_device;
};

/// Constant one-way delay plus an optional sinusoid: ms + amplitude * sin(2 pi (now - t0) / period).
transport::DelayFn MakeDelay(double ms, double amplitude_ms = 0.0, double period_ms = 1.0);

struct PairResult {
  NodeResult device;
  NodeResult cloud;
};

/// Runs both nodes in this process over a TCP loopback connection; the
/// cloud listens on an ephemeral port and the device connects.
PairResult RunLoopbackPair(const NodeConfig& device, const NodeConfig& cloud, const LinkOptions& link = {});

}  // namespace dragon::runtime
