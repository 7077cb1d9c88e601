#pragma once

#include <cmath>
#include <cstdint>

#include "pcmlab/vec2.hpp"

namespace pcmlab {

// Counter-based stream RNG: every (seed, purpose, index) triple opens an
// independent stream, so draws depend only on the logical sample identity and
// never on batch order or thread interleaving.
namespace stream {
constexpr uint64_t kInit = 0x01;        // parameter initialization
constexpr uint64_t kData = 0x02;        // dataset draws
constexpr uint64_t kTeacherStep = 0x03; // teacher training batches
constexpr uint64_t kDistillStep = 0x04; // distill training tuples
constexpr uint64_t kSampler = 0x05;     // sampler noise
constexpr uint64_t kEval = 0x06;        // evaluation draws
constexpr uint64_t kProjection = 0x07;  // sliced-distance directions
}  // namespace stream

namespace detail {
// splitmix64 finalizer, also used to hash the stream key
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

class StreamRng {
  public:
    StreamRng(uint64_t seed, uint64_t purpose, uint64_t index)
        : state_(detail::mix64(detail::mix64(detail::mix64(seed) ^ purpose) ^ index)) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform [0, 1), 53-bit mantissa
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // Box-Muller on (0,1] x [0,1)
        double u1 = 1.0 - next_double();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Vec2 next_normal2() {
        double a = next_normal();
        double b = next_normal();
        return {a, b};
    }

    uint64_t next_below(uint64_t n) { return next_u64() % n; }

  private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace pcmlab
