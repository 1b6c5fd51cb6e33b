#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace slicesim {

/// Seeded random stream. Every consumer (per-user traffic, per-user fading,
/// agent init, exploration noise, replay sampling) owns its own stream,
/// derived from the single run seed plus a scope tag, so adding or removing
/// one consumer never perturbs the draws seen by another.
class RngStream {
public:
    RngStream() : engine_(0) {}
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    /// Derive a child stream from (seed, scope, a, b). The scope string is
    /// hashed with FNV-1a and the result mixed through splitmix64 rounds,
    /// so ("traffic", 0, 3) and ("fading", 0, 3) are unrelated streams.
    static RngStream derive(std::uint64_t seed, std::string_view scope,
                            std::uint64_t a = 0, std::uint64_t b = 0) {
        std::uint64_t h = 1469598103934665603ull;  // FNV offset basis
        for (char c : scope) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        std::uint64_t s = splitmix(seed ^ h);
        s = splitmix(s ^ splitmix(a + 0x9e3779b97f4a7c15ull));
        s = splitmix(s ^ splitmix(b + 0x7f4a7c15f39cc060ull));
        return RngStream(s);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (cosine branch only; the sine mate is
    /// discarded to keep one draw = two uniforms, stateless).
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * M_PI * u2);
    }

    /// Exponential with the given mean via inverse CDF.
    double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection-free modulo bias is negligible only for tiny n; use
        // Lemire-style rejection to keep sampling exact.
        std::uint64_t x = engine_();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            std::uint64_t t = -n % n;
            while (lo < t) {
                x = engine_();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
};

}  // namespace slicesim
