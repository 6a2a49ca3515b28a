#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, step, block), so a trajectory's noise does not depend on
// which worker runs it or in what order.
//
// Generator: Philox4x32-10 (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3", SC11). Counter words are (block, step, stream_lo,
// stream_hi); the 64-bit seed is the key. Normals come from Box-Muller on
// two 53-bit uniforms per 128-bit block.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

#include "stochlind/errors.hpp"

namespace stochlind {

class Philox4x32 {
  public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) noexcept
    {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            ctr = single_round(ctr, key);
        }
        return ctr;
    }

  private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static constexpr Counter single_round(const Counter& c, const Key& k) noexcept
    {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Deterministic substream keyed by (seed, stream), addressed by step.
class CounterStream {
  public:
    CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_lo_(static_cast<std::uint32_t>(stream)),
          stream_hi_(static_cast<std::uint32_t>(stream >> 32))
    {
    }

    Philox4x32::Counter raw(std::uint64_t step, std::uint32_t block) const
    {
        if (step > 0xFFFFFFFFull) {
            throw ConfigError("CounterStream: step index exceeds 2^32 - 1");
        }
        return Philox4x32::block({block, static_cast<std::uint32_t>(step), stream_lo_, stream_hi_}, key_);
    }

    /// Fills `out` with independent standard normals for this step.
    void normals(std::uint64_t step, std::span<double> out) const
    {
        std::uint32_t block = 0;
        for (std::size_t i = 0; i < out.size(); i += 2, ++block) {
            const auto r = raw(step, block);
            const double u1 = open_unit(r[0], r[1]);
            const double u2 = open_unit(r[2], r[3]);
            const double radius = std::sqrt(-2.0 * std::log(u1));
            const double angle = 2.0 * std::numbers::pi * u2;
            out[i] = radius * std::cos(angle);
            if (i + 1 < out.size()) {
                out[i + 1] = radius * std::sin(angle);
            }
        }
    }

    /// Independent signs (+1/-1) for this step, one per output slot.
    void signs(std::uint64_t step, std::span<double> out) const
    {
        std::uint32_t block = 0;
        for (std::size_t i = 0; i < out.size(); i += 4, ++block) {
            const auto r = raw(step, block);
            for (std::size_t j = 0; j < 4 && i + j < out.size(); ++j) {
                out[i + j] = (r[j] & 1u) ? 1.0 : -1.0;
            }
        }
    }

  private:
    // 53 random bits mapped to the open interval (0, 1).
    static double open_unit(std::uint32_t hi, std::uint32_t lo) noexcept
    {
        const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    Philox4x32::Key key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
};

}  // namespace stochlind
