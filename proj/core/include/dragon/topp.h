#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dragon/bytes.h"
#include "dragon/dist.h"

namespace dragon {

/// IEEE binary16 helpers (round to nearest even).
std::uint16_t FloatToHalfBits(float value);
float HalfBitsToFloat(std::uint16_t bits);

struct SparseEntry {
  TokenId token;
  std::uint16_t half_bits;

  float value() const { return HalfBitsToFloat(half_bits); }
  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Top-p slice of a distribution, probabilities stored as binary16.
/// Entries are sorted by token id.
struct CompressedDist {
  std::uint32_t vocab_size = 0;
  std::vector<SparseEntry> entries;

  friend bool operator==(const CompressedDist&, const CompressedDist&) = default;
};

class InvalidCompressedDist : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Keeps the smallest highest-probability prefix whose mass reaches `p_threshold`
/// (ties broken toward the lower token id). Requires 0 < p_threshold <= 1.
CompressedDist TopPEncode(const LogDist& p, double p_threshold);

/// Renormalizes the kept mass; every other token gets -inf.
LogDist TopPDecode(const CompressedDist& c);

/// Checks the ordering, positivity and total-mass invariants.
void Validate(const CompressedDist& c);

/// u32 count, u32 vocab_size, count x (u32 token, binary16 value); little-endian.
void WriteCompressedDist(ByteWriter& w, const CompressedDist& c);
CompressedDist ReadCompressedDist(ByteReader& r);
inline std::size_t EncodedSize(const CompressedDist& c) { return 8 + 6 * c.entries.size(); }

}  // namespace dragon
