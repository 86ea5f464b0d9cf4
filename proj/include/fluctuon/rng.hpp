// rng.hpp — Counter-based Philox4x32-10 random streams
//
// Streams are addressed by (seed, stream_id); draws within a stream are
// produced by incrementing a block counter. Parallel and serial runs that
// touch the same (seed, stream_id) pairs therefore produce identical draws.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace fluctuon {

namespace detail {

struct Philox4x32 {
    static constexpr std::uint32_t mult0 = 0xD2511F53u;
    static constexpr std::uint32_t mult1 = 0xCD9E8D57u;
    static constexpr std::uint32_t weyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t weyl1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> encrypt(std::array<std::uint32_t, 2> key,
                                                std::array<std::uint32_t, 4> ctr) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(mult0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(mult1) * ctr[2];
            const std::array<std::uint32_t, 4> next = {
                static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                static_cast<std::uint32_t>(p0),
            };
            ctr = next;
            key[0] += weyl0;
            key[1] += weyl1;
        }
        return ctr;
    }
};

} // namespace detail

class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream_id) {}

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        return (hi << 32) | lo;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Exponentially distributed waiting time with the given rate.
    double exponential(double rate) {
        if (!(rate > 0.0)) throw std::invalid_argument("RngStream::exponential: rate must be > 0");
        return -std::log1p(-uniform01()) / rate;
    }

    /// Fair random sign, -1 or +1.
    int sign() { return (next_u32() & 1u) ? 1 : -1; }

  private:
    void refill() {
        buf_ = detail::Philox4x32::encrypt(
            key_, {static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                   static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32)});
        ++block_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
};

} // namespace fluctuon
