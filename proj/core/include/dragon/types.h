#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dragon {

using TokenId = std::uint32_t;

/// Physical node identity. Wire value of the enum is stable.
enum class Side : std::uint8_t { kDevice = 0, kCloud = 1 };

constexpr Side Other(Side s) { return s == Side::kDevice ? Side::kCloud : Side::kDevice; }
constexpr std::size_t Index(Side s) { return static_cast<std::size_t>(s); }

std::string_view ToString(Side s);
/// Accepts "device" or "cloud".
Side ParseSide(std::string_view name);

/// Violated wire/step ordering between the two nodes.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dragon
