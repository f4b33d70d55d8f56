#pragma once

#include <cmath>
#include <cstdint>

namespace ilat {

/// Splittable counter-based pseudorandom stream.
///
/// The generator is the SplitMix64 output function evaluated at
/// key + counter * golden-gamma, so every draw is a pure function of
/// (key, counter). Child streams are derived from (key, task index)
/// without advancing the parent, which keeps parallel fan-out
/// deterministic: worker i always sees the same stream regardless of
/// scheduling.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ 0x8f462907'5f3283f8ULL)) {}

    std::uint64_t next_u64() {
        counter_ += 1;
        return mix(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    /// Derive an independent stream for task `index`; the parent state is untouched.
    RngStream child(std::uint64_t index) const {
        RngStream c(0);
        c.key_ = mix(mix(key_ ^ 0xd1342543'de82ef95ULL) + (index + 1) * 0xaf251af3'b0f025b5ULL);
        c.counter_ = 0;
        c.cached_normal_ = false;
        return c;
    }

    /// Uniform draw on the open interval (0, 1).
    double uniform01() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform on (lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Multiply-shift; bias is < 2^-64 per draw, irrelevant at our sample sizes.
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via the Marsaglia polar method (second value cached).
    double normal() {
        if (cached_normal_) {
            cached_normal_ = false;
            return cache_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double r = std::sqrt(-2.0 * std::log(s) / s);
        cache_ = v * r;
        cached_normal_ = true;
        return u * r;
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double cache_ = 0.0;
    bool cached_normal_ = false;
};

}  // namespace ilat
