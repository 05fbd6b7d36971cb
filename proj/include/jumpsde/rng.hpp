#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace jumpsde {

/// Philox4x32-10 counter-based block cipher (Salmon et al., SC'11).
/// Stateless: the same (counter, key) always yields the same four words.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) {
        constexpr std::uint32_t kM0 = 0xD2511F53u;
        constexpr std::uint32_t kM1 = 0xCD9E8D57u;
        constexpr std::uint32_t kW0 = 0x9E3779B9u;
        constexpr std::uint32_t kW1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kW0;
            key[1] += kW1;
        }
        return ctr;
    }
};

/// SplitMix64 finalizer; used to derive stream keys from user seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Named substreams of a path. Each gets a disjoint counter range.
enum class Substream : std::uint32_t {
    Brownian = 0,
    JumpTimes = 1,
    JumpMarks = 2,
    Brownian2 = 3,  // second noise of the reflection coupling
    Auxiliary = 4,
};

/// A reproducible random stream keyed by (seed, index, substream).
///
/// Satisfies UniformRandomBitGenerator so it also works with <random>
/// distributions, but the library only uses the members below, whose output
/// is fixed across platforms and standard-library versions.
class Stream {
public:
    using result_type = std::uint32_t;

    Stream() : Stream(0, 0, Substream::Auxiliary) {}
    Stream(std::uint64_t seed, std::uint64_t index, Substream sub) {
        const std::uint64_t k = splitmix64(splitmix64(seed) ^ (index * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull));
        key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
        ctr_ = {0u, 0u, static_cast<std::uint32_t>(index >> 32) ^ static_cast<std::uint32_t>(sub) * 0x85EBCA6Bu,
                static_cast<std::uint32_t>(sub)};
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    /// Uniform on the open interval (0,1) with 53 bits of resolution.
    double uniform() {
        const std::uint64_t hi = (*this)() >> 5;  // 27 bits
        const std::uint64_t lo = (*this)() >> 6;  // 26 bits
        return (static_cast<double>((hi << 26) | lo) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by Box-Muller, caching the second variate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    std::uint64_t blocks_used() const { return (std::uint64_t{ctr_[1]} << 32) | ctr_[0]; }

private:
    void refill() {
        buf_ = Philox4x32::block(ctr_, key_);
        if (++ctr_[0] == 0) ++ctr_[1];
        pos_ = 0;
    }

    Philox4x32::Counter ctr_{};
    Philox4x32::Key key_{};
    Philox4x32::Counter buf_{};
    int pos_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// The three substreams a path consumes.
struct PathStreams {
    Stream brownian;
    Stream brownian2;
    Stream jump_times;
    Stream jump_marks;

    PathStreams(std::uint64_t seed, std::uint64_t index)
        : brownian(seed, index, Substream::Brownian),
          brownian2(seed, index, Substream::Brownian2),
          jump_times(seed, index, Substream::JumpTimes),
          jump_marks(seed, index, Substream::JumpMarks) {}
};

}  // namespace jumpsde
