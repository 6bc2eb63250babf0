#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <vector>

namespace dragon {

/// Thrown by ByteReader when the buffer ends before a field does.
class TruncatedInput : public std::runtime_error {
 public:
  TruncatedInput() : std::runtime_error("truncated input") {}
};

/// Little-endian appender.
class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void U8(std::uint8_t v) { out_.push_back(v); }
  void U16(std::uint16_t v) { PutLe(v); }
  void U32(std::uint32_t v) { PutLe(v); }
  void U64(std::uint64_t v) { PutLe(v); }
  void F32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    PutLe(bits);
  }
  void F64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    PutLe(bits);
  }
  void Bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

 private:
  template <typename T>
  void PutLe(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t>& out_;
};

/// Little-endian cursor over a borrowed buffer.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t U8() { return GetLe<std::uint8_t>(); }
  std::uint16_t U16() { return GetLe<std::uint16_t>(); }
  std::uint32_t U32() { return GetLe<std::uint32_t>(); }
  std::uint64_t U64() { return GetLe<std::uint64_t>(); }
  float F32() {
    auto bits = GetLe<std::uint32_t>();
    float v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  double F64() {
    auto bits = GetLe<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::span<const std::uint8_t> Bytes(std::size_t n) {
    if (remaining() < n) throw TruncatedInput();
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  template <typename T>
  T GetLe() {
    if (remaining() < sizeof(T)) throw TruncatedInput();
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace dragon
