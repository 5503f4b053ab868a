#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace copygraph::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Seedable random stream. All sampling primitives are implemented on top of
/// the raw 64-bit output so results do not depend on the standard library's
/// distribution internals.
class Stream {
public:
    explicit Stream(std::uint64_t key) {
        std::seed_seq seq{static_cast<std::uint32_t>(key),
                          static_cast<std::uint32_t>(key >> 32),
                          0x6b79636fu, 0x68706172u};
        gen_.seed(seq);
    }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection sampling, unbiased.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller, one spare cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derive the key of a named substream from a master seed. Streams are
/// addressed by (module, purpose, index) so parallel schedules cannot change
/// which stream feeds which unit of work.
inline std::uint64_t derive_key(std::uint64_t seed, std::string_view module,
                                std::string_view purpose, std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix_byte = [&h](unsigned char b) {
        h ^= b;
        h *= 0x100000001b3ull;
    };
    auto mix_u64 = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(v >> (8 * i)));
    };
    mix_u64(seed);
    for (char c : module) mix_byte(static_cast<unsigned char>(c));
    mix_byte(0x1f);
    for (char c : purpose) mix_byte(static_cast<unsigned char>(c));
    mix_byte(0x1f);
    mix_u64(index);
    return splitmix64(h);
}

inline Stream make_stream(std::uint64_t seed, std::string_view module,
                          std::string_view purpose, std::uint64_t index = 0) {
    return Stream(derive_key(seed, module, purpose, index));
}

}  // namespace copygraph::rng
