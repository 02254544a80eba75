#pragma once

#include <cmath>
#include <cstdint>

namespace ewlogit {

// SplitMix64 (Steele, Lea & Flood 2014; Vigna's fixed-increment variant).
// Chosen over std:: engines so that chain trajectories are bit-identical
// across platforms, and so that worker chains can draw independent streams
// from one master seed via split().
class SplitMix64 {
  public:
    SplitMix64() = default;
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform double in [0,1), 53 bits
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0,1], safe as a log() argument
    double next_double_open() { return 1.0 - next_double(); }

    // standard normal via Box-Muller; the spare is cached in-engine so the
    // stream stays deterministic for a fixed call sequence
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_double_open();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Derive an independent child stream. The child seed is one full output
    // of the parent re-mixed, so parent and child sequences do not collide.
    SplitMix64 split() {
        std::uint64_t z = next_u64() ^ 0x6a09e667f3bcc909ull;
        z = (z ^ (z >> 29)) * 0xff51afd7ed558ccdull;
        z = (z ^ (z >> 32));
        return SplitMix64(z);
    }

    std::uint64_t state() const { return state_; }

  private:
    std::uint64_t state_ = 0x853c49e6748fea9bull;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ewlogit
