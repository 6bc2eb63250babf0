#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "dragon/topp.h"
#include "dragon/types.h"

namespace dragon::transport {

enum class MsgType : std::uint8_t { kDraft = 1, kTarget = 2, kSwitch = 3, kProbe = 4, kHello = 5, kBye = 6 };
enum class Codec : std::uint8_t { kNone = 0, kBlock = 1 };

Codec ParseCodec(std::string_view name);

/// type(1) codec(1) body_len(4, little-endian).
inline constexpr std::size_t kHeaderSize = 6;

struct MessageHeader {
  MsgType type;
  Codec codec;
  std::uint32_t body_len;
};

struct DraftMsg {
  std::uint32_t step = 0;
  TokenId token = 0;
  double h = 0.0;
  CompressedDist dist;
  float decode_ms = 0.0f;
  friend bool operator==(const DraftMsg&, const DraftMsg&) = default;
};

struct TargetMsg {
  std::uint32_t step = 0;
  TokenId target = 0;
  bool accept_l = false;  // device draft
  bool accept_r = false;  // cloud draft
  std::optional<Side> switch_to;
  friend bool operator==(const TargetMsg&, const TargetMsg&) = default;
};

struct SwitchMsg {
  std::uint32_t step = 0;  // first step aggregated by `to`
  Side to = Side::kDevice;
  friend bool operator==(const SwitchMsg&, const SwitchMsg&) = default;
};

/// RTT probe. A request is answered with the same step and origin timestamp
/// and `echo` set. Every TargetMsg is also answered by an echo for its step.
struct ProbeMsg {
  std::uint32_t step = 0;
  bool echo = false;
  double origin_ms = 0.0;
  friend bool operator==(const ProbeMsg&, const ProbeMsg&) = default;
};

struct HelloMsg {
  friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};
struct ByeMsg {
  friend bool operator==(const ByeMsg&, const ByeMsg&) = default;
};

using Message = std::variant<DraftMsg, TargetMsg, SwitchMsg, ProbeMsg, HelloMsg, ByeMsg>;

MsgType TypeOf(const Message& m);

enum class WireError { kTruncated, kLengthMismatch, kUnknownType, kUnknownCodec, kMalformedBody };

const char* ToString(WireError e);

class WireFormatError : public std::runtime_error {
 public:
  explicit WireFormatError(WireError code, const std::string& detail = {});
  WireError code() const { return code_; }

 private:
  WireError code_;
};

/// Plain (uncompressed) body bytes.
std::vector<std::uint8_t> EncodeBody(const Message& m);
/// Full frame: header followed by the (possibly compressed) body.
std::vector<std::uint8_t> Encode(const Message& m, Codec codec = Codec::kNone);

MessageHeader DecodeHeader(std::span<const std::uint8_t> header);
Message DecodeBody(MsgType type, Codec codec, std::span<const std::uint8_t> body);
/// Decodes exactly one frame occupying all of `frame`.
Message Decode(std::span<const std::uint8_t> frame);

/// Incremental parser for a byte stream of concatenated frames.
class FrameParser {
 public:
  void Feed(std::span<const std::uint8_t> bytes);
  /// Next complete message, or nullopt if more bytes are needed.
  std::optional<Message> Next();
  std::size_t buffered() const { return buffer_.size() - consumed_; }

 private:
  std::vector<std::uint8_t> buffer_;
  std::size_t consumed_ = 0;
};

}  // namespace dragon::transport
