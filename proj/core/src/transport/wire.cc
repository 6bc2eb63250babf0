#include "dragon/transport/wire.h"

#include <zlib.h>

#include <string>

#include "dragon/bytes.h"

namespace dragon::transport {
namespace {

constexpr std::uint8_t kNoSide = 0xFF;
// Refuse to inflate bodies beyond this size.
constexpr std::uint32_t kMaxInflatedBody = 64u << 20;

void Write(ByteWriter& w, const DraftMsg& m) {
  w.U32(m.step);
  w.U32(m.token);
  w.F64(m.h);
  WriteCompressedDist(w, m.dist);
  w.F32(m.decode_ms);
}

void Write(ByteWriter& w, const TargetMsg& m) {
  w.U32(m.step);
  w.U32(m.target);
  w.U8(m.accept_l ? 1 : 0);
  w.U8(m.accept_r ? 1 : 0);
  w.U8(m.switch_to ? static_cast<std::uint8_t>(*m.switch_to) : kNoSide);
}

void Write(ByteWriter& w, const SwitchMsg& m) {
  w.U32(m.step);
  w.U8(static_cast<std::uint8_t>(m.to));
}

void Write(ByteWriter& w, const ProbeMsg& m) {
  w.U32(m.step);
  w.U8(m.echo ? 1 : 0);
  w.F64(m.origin_ms);
}

void Write(ByteWriter&, const HelloMsg&) {}
void Write(ByteWriter&, const ByeMsg&) {}

bool ReadBool(ByteReader& r) {
  const std::uint8_t v = r.U8();
  if (v > 1) throw WireFormatError(WireError::kMalformedBody, "boolean byte " + std::to_string(v));
  return v == 1;
}

Side ReadSide(ByteReader& r) {
  const std::uint8_t v = r.U8();
  if (v > 1) throw WireFormatError(WireError::kMalformedBody, "side byte " + std::to_string(v));
  return static_cast<Side>(v);
}

Message ReadPlain(MsgType type, ByteReader& r) {
  switch (type) {
    case MsgType::kDraft: {
      DraftMsg m;
      m.step = r.U32();
      m.token = r.U32();
      m.h = r.F64();
      try {
        m.dist = ReadCompressedDist(r);
      } catch (const InvalidCompressedDist& e) {
        throw WireFormatError(WireError::kMalformedBody, e.what());
      }
      m.decode_ms = r.F32();
      return m;
    }
    case MsgType::kTarget: {
      TargetMsg m;
      m.step = r.U32();
      m.target = r.U32();
      m.accept_l = ReadBool(r);
      m.accept_r = ReadBool(r);
      const std::uint8_t side = r.U8();
      if (side != kNoSide) {
        if (side > 1) throw WireFormatError(WireError::kMalformedBody, "switch side byte " + std::to_string(side));
        m.switch_to = static_cast<Side>(side);
      }
      return m;
    }
    case MsgType::kSwitch: {
      SwitchMsg m;
      m.step = r.U32();
      m.to = ReadSide(r);
      return m;
    }
    case MsgType::kProbe: {
      ProbeMsg m;
      m.step = r.U32();
      m.echo = ReadBool(r);
      m.origin_ms = r.F64();
      return m;
    }
    case MsgType::kHello:
      return HelloMsg{};
    case MsgType::kBye:
      return ByeMsg{};
  }
  throw WireFormatError(WireError::kUnknownType, std::to_string(static_cast<int>(type)));
}

bool KnownType(std::uint8_t t) { return t >= 1 && t <= 6; }
bool KnownCodec(std::uint8_t c) { return c <= 1; }

std::vector<std::uint8_t> Deflate(std::span<const std::uint8_t> plain) {
  uLongf bound = compressBound(static_cast<uLong>(plain.size()));
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.U32(static_cast<std::uint32_t>(plain.size()));
  const std::size_t prefix = out.size();
  out.resize(prefix + bound);
  if (compress2(out.data() + prefix, &bound, plain.data(), static_cast<uLong>(plain.size()), Z_BEST_SPEED) != Z_OK) {
    throw std::runtime_error("body compression failed");
  }
  out.resize(prefix + bound);
  return out;
}

std::vector<std::uint8_t> Inflate(std::span<const std::uint8_t> packed) {
  ByteReader r(packed);
  std::uint32_t plain_len = 0;
  try {
    plain_len = r.U32();
  } catch (const TruncatedInput&) {
    throw WireFormatError(WireError::kTruncated, "compressed body without length prefix");
  }
  if (plain_len > kMaxInflatedBody) throw WireFormatError(WireError::kMalformedBody, "inflated body too large");
  std::vector<std::uint8_t> plain(plain_len);
  uLongf got = plain_len;
  const auto rest = packed.subspan(4);
  const int rc = uncompress(plain.data(), &got, rest.data(), static_cast<uLong>(rest.size()));
  if (rc != Z_OK || got != plain_len) throw WireFormatError(WireError::kMalformedBody, "corrupt compressed body");
  return plain;
}

}  // namespace

Codec ParseCodec(std::string_view name) {
  if (name == "none") return Codec::kNone;
  if (name == "block" || name == "zlib") return Codec::kBlock;
  throw std::invalid_argument("unknown codec '" + std::string(name) + "'");
}

MsgType TypeOf(const Message& m) { return static_cast<MsgType>(m.index() + 1); }

const char* ToString(WireError e) {
  switch (e) {
    case WireError::kTruncated:
      return "truncated frame";
    case WireError::kLengthMismatch:
      return "length mismatch";
    case WireError::kUnknownType:
      return "unknown message type";
    case WireError::kUnknownCodec:
      return "unknown codec";
    case WireError::kMalformedBody:
      return "malformed body";
  }
  return "wire error";
}

WireFormatError::WireFormatError(WireError code, const std::string& detail)
    : std::runtime_error(detail.empty() ? std::string(ToString(code)) : std::string(ToString(code)) + ": " + detail),
      code_(code) {}

std::vector<std::uint8_t> EncodeBody(const Message& m) {
  std::vector<std::uint8_t> body;
  ByteWriter w(body);
  std::visit([&](const auto& msg) { Write(w, msg); }, m);
  return body;
}

std::vector<std::uint8_t> Encode(const Message& m, Codec codec) {
  std::vector<std::uint8_t> body = EncodeBody(m);
  if (codec == Codec::kBlock) body = Deflate(body);
  std::vector<std::uint8_t> frame;
  frame.reserve(kHeaderSize + body.size());
  ByteWriter w(frame);
  w.U8(static_cast<std::uint8_t>(TypeOf(m)));
  w.U8(static_cast<std::uint8_t>(codec));
  w.U32(static_cast<std::uint32_t>(body.size()));
  w.Bytes(body);
  return frame;
}

MessageHeader DecodeHeader(std::span<const std::uint8_t> header) {
  if (header.size() < kHeaderSize) throw WireFormatError(WireError::kTruncated, "short header");
  ByteReader r(header);
  const std::uint8_t type = r.U8();
  const std::uint8_t codec = r.U8();
  const std::uint32_t len = r.U32();
  if (!KnownType(type)) throw WireFormatError(WireError::kUnknownType, std::to_string(type));
  if (!KnownCodec(codec)) throw WireFormatError(WireError::kUnknownCodec, std::to_string(codec));
  return {static_cast<MsgType>(type), static_cast<Codec>(codec), len};
}

Message DecodeBody(MsgType type, Codec codec, std::span<const std::uint8_t> body) {
  std::vector<std::uint8_t> inflated;
  if (codec == Codec::kBlock) {
    inflated = Inflate(body);
    body = inflated;
  } else if (codec != Codec::kNone) {
    throw WireFormatError(WireError::kUnknownCodec, std::to_string(static_cast<int>(codec)));
  }
  ByteReader r(body);
  Message m;
  try {
    m = ReadPlain(type, r);
  } catch (const TruncatedInput&) {
    throw WireFormatError(WireError::kLengthMismatch, "body shorter than its fields");
  }
  if (r.remaining() != 0) {
    throw WireFormatError(WireError::kLengthMismatch, std::to_string(r.remaining()) + " trailing body bytes");
  }
  return m;
}

Message Decode(std::span<const std::uint8_t> frame) {
  const MessageHeader h = DecodeHeader(frame);
  const std::size_t available = frame.size() - kHeaderSize;
  if (available < h.body_len) throw WireFormatError(WireError::kTruncated, "body shorter than header length");
  if (available > h.body_len) throw WireFormatError(WireError::kLengthMismatch, "bytes after the frame body");
  return DecodeBody(h.type, h.codec, frame.subspan(kHeaderSize));
}

void FrameParser::Feed(std::span<const std::uint8_t> bytes) {
  if (consumed_ > 0 && consumed_ == buffer_.size()) {
    buffer_.clear();
    consumed_ = 0;
  }
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> FrameParser::Next() {
  const std::span<const std::uint8_t> pending(buffer_.data() + consumed_, buffer_.size() - consumed_);
  if (pending.size() < kHeaderSize) return std::nullopt;
  const MessageHeader h = DecodeHeader(pending);
  if (pending.size() - kHeaderSize < h.body_len) return std::nullopt;
  Message m = DecodeBody(h.type, h.codec, pending.subspan(kHeaderSize, h.body_len));
  consumed_ += kHeaderSize + h.body_len;
  if (consumed_ > (1u << 16) && consumed_ * 2 > buffer_.size()) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(consumed_));
    consumed_ = 0;
  }
  return m;
}

}  // namespace dragon::transport
