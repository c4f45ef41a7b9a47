#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace pena {

// Philox 4x32-10 counter-based generator (Salmon et al., SC 2011).
//
// A stream is addressed by (seed, stream_index); distinct indices give
// statistically independent streams, which is how per-path generators are
// derived in the Monte Carlo engine. Draws within a stream advance a 64-bit
// block counter, so results do not depend on how paths are scheduled across
// workers.
class PhiloxStream {
 public:
  using result_type = std::uint32_t;

  PhiloxStream(std::uint64_t seed, std::uint64_t stream_index) noexcept
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(stream_index)),
        stream_hi_(static_cast<std::uint32_t>(stream_index >> 32)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }

  result_type operator()() { return next_u32(); }

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) refill();
    return buf_[buf_pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Index into a cumulative probability table (last entry ~ 1.0).
  std::size_t pick_from_cdf(std::span<const double> cdf) {
    const double u = uniform01();
    std::size_t lo = 0, hi = cdf.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cdf[mid] <= u) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return lo < cdf.size() ? lo : cdf.size() - 1;
  }

  // One keyed Philox block; exposed for known-answer tests.
  static void block(const std::uint32_t counter[4], const std::uint32_t key[2],
                    std::uint32_t out[4]) {
    std::uint32_t c0 = counter[0], c1 = counter[1], c2 = counter[2], c3 = counter[3];
    std::uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t(kM0) * c0;
      const std::uint64_t p1 = std::uint64_t(kM1) * c2;
      const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
      const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      if (round < 9) {
        k0 += kW0;
        k1 += kW1;
      }
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  void refill() {
    const std::uint32_t counter[4] = {static_cast<std::uint32_t>(block_),
                                      static_cast<std::uint32_t>(block_ >> 32), stream_lo_,
                                      stream_hi_};
    const std::uint32_t key[2] = {key0_, key1_};
    block(counter, key, buf_);
    ++block_;
    buf_pos_ = 0;
  }

  std::uint32_t key0_, key1_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t block_ = 0;
  std::uint32_t buf_[4] = {};
  int buf_pos_ = 4;
};

}  // namespace pena
