#include "dragon/types.h"

namespace dragon {

std::string_view ToString(Side s) { return s == Side::kDevice ? "device" : "cloud"; }

Side ParseSide(std::string_view name) {
  if (name == "device") return Side::kDevice;
  if (name == "cloud") return Side::kCloud;
  throw std::invalid_argument("unknown side '" + std::string(name) + "'");
}

}  // namespace dragon
