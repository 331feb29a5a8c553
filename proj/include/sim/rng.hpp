#pragma once

#include <cmath>
#include <cstdint>

namespace sim {

/// Counter-based 64-bit generator (SplitMix64).
///
/// The state advances by a fixed odd constant and each output is a bijective
/// mix of the state, so output i is a pure function of (seed, i).  This is
/// what makes trajectories reproducible across builds and lets independent
/// substreams be carved out of one master seed.
///
/// Consumption contract (relied on by the byte-determinism tests):
///   * next_u64     - one state increment per call.
///   * uniform      - one u64; returns ((u >> 11) + 0.5) * 2^-53, open (0,1).
///   * normal       - Marsaglia polar method; draws uniforms in pairs until
///                    the point falls inside the unit disc, returns one value
///                    and caches the second.
///   * bounded      - one u64, multiply-high reduction (bias < n / 2^64).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Decorrelated child seed for substream `stream` of `seed`.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        return mix(mix(seed ^ 0x9E3779B97F4A7C15ull) + mix(stream ^ 0xD1B54A32D192ED03ull));
    }

    static Rng substream(std::uint64_t seed, std::uint64_t stream) {
        return Rng(derive(seed, stream));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal deviate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0); // s > 0 always: uniform() never returns 0.5 exactly
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        have_spare_ = true;
        return u * factor;
    }

    /// Uniform integer in [0, n).
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Substream ids used by the harness. Keeping input and mask consumption on
/// separate streams is what makes dropout with p=1 reproduce a plain SGD run
/// byte for byte.
namespace stream {
inline constexpr std::uint64_t teacher = 0;
inline constexpr std::uint64_t student = 1;
inline constexpr std::uint64_t input = 2;
inline constexpr std::uint64_t mask = 3;
inline constexpr std::uint64_t potentials = 4; // thermodynamic-limit backend
} // namespace stream

} // namespace sim
