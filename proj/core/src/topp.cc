#include "dragon/topp.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dragon {
namespace {

constexpr double kBoundarySlack = 1e-12;
constexpr double kMassSlack = 0x1.0p-9;
constexpr std::uint16_t kSmallestSubnormal = 0x0001;

}  // namespace

std::uint16_t FloatToHalfBits(float value) { return Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(value)); }

float HalfBitsToFloat(std::uint16_t bits) {
  return static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(bits));
}

CompressedDist TopPEncode(const LogDist& p, double p_threshold) {
  if (!(p_threshold > 0.0 && p_threshold <= 1.0)) throw std::invalid_argument("top-p threshold must be in (0, 1]");
  const auto lp = p.log_probs();
  std::vector<TokenId> order;
  order.reserve(lp.size());
  for (std::size_t x = 0; x < lp.size(); ++x) {
    if (std::isfinite(lp[x])) order.push_back(static_cast<TokenId>(x));
  }
  if (order.empty()) throw InvalidCompressedDist("cannot encode an empty distribution");
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) { return lp[a] > lp[b]; });

  std::size_t kept = 0;
  double cumulative = 0.0;
  while (kept < order.size()) {
    cumulative += std::exp(lp[order[kept]]);
    ++kept;
    if (cumulative >= p_threshold - kBoundarySlack) break;
  }
  order.resize(kept);
  std::sort(order.begin(), order.end());

  CompressedDist out;
  out.vocab_size = static_cast<std::uint32_t>(lp.size());
  out.entries.reserve(kept);
  for (TokenId id : order) {
    std::uint16_t bits = FloatToHalfBits(static_cast<float>(std::exp(lp[id])));
    if (bits == 0) bits = kSmallestSubnormal;
    out.entries.push_back({id, bits});
  }
  return out;
}

void Validate(const CompressedDist& c) {
  if (c.vocab_size < 2) throw InvalidCompressedDist("vocabulary size below 2");
  if (c.entries.empty()) throw InvalidCompressedDist("no entries");
  double total = 0.0;
  for (std::size_t i = 0; i < c.entries.size(); ++i) {
    const auto& e = c.entries[i];
    if (e.token >= c.vocab_size) throw InvalidCompressedDist("token id outside vocabulary");
    if (i > 0 && e.token <= c.entries[i - 1].token) throw InvalidCompressedDist("token ids not strictly increasing");
    const float v = e.value();
    if (!(v > 0.0f) || !std::isfinite(v)) throw InvalidCompressedDist("non-positive or non-finite value");
    total += v;
  }
  if (total > 1.0 + kMassSlack) throw InvalidCompressedDist("kept mass exceeds one");
}

LogDist TopPDecode(const CompressedDist& c) {
  Validate(c);
  std::vector<double> logw(c.vocab_size, -std::numeric_limits<double>::infinity());
  for (const auto& e : c.entries) logw[e.token] = std::log(static_cast<double>(e.value()));
  return LogDist::Normalize(std::move(logw));
}

void WriteCompressedDist(ByteWriter& w, const CompressedDist& c) {
  w.U32(static_cast<std::uint32_t>(c.entries.size()));
  w.U32(c.vocab_size);
  for (const auto& e : c.entries) {
    w.U32(e.token);
    w.U16(e.half_bits);
  }
}

CompressedDist ReadCompressedDist(ByteReader& r) {
  CompressedDist c;
  const std::uint32_t count = r.U32();
  c.vocab_size = r.U32();
  if (static_cast<std::uint64_t>(count) * 6 > r.remaining()) throw TruncatedInput();
  c.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const TokenId token = r.U32();
    const std::uint16_t bits = r.U16();
    c.entries.push_back({token, bits});
  }
  Validate(c);
  return c;
}

}  // namespace dragon
