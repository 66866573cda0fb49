#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace litmeth {

// Deterministic RNG used everywhere randomness appears. Self-contained
// (splitmix64 core) so seeded runs are reproducible bit-for-bit across
// platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). Modulo bias is irrelevant at these scales.
    std::uint64_t next_below(std::uint64_t bound) { return bound ? next_u64() % bound : 0; }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Normal(0, std) clipped by resampling outside two standard deviations.
    double next_truncated_normal(double stddev) {
        for (;;) {
            double v = next_normal();
            if (std::abs(v) <= 2.0) return v * stddev;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Derives a per-stage seed from the pipeline seed, so one top-level seed
// drives every stage independently.
inline std::uint64_t fanout_seed(std::uint64_t seed, std::string_view stage) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (char c : stage) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    Rng mix(seed ^ h);
    return mix.next_u64();
}

inline std::uint64_t fanout_seed(std::uint64_t seed, std::string_view stage, std::uint64_t index) {
    Rng mix(fanout_seed(seed, stage) ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
    return mix.next_u64();
}

}  // namespace litmeth
