#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace stopout {

// Counter-based deterministic RNG. Streams are derived by mixing a root seed
// with an arbitrary key sequence, so per-trial / per-learner streams are
// independent of execution order and thread count. All sampling routines are
// hand-rolled so output is identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
        std::uint64_t s = mix(seed ^ 0x9e3779b97f4a7c15ull);
        for (std::uint64_t k : keys) s = mix(s ^ mix(k + 0xbf58476d1ce4e5b9ull));
        Rng r(0);
        r.state_ = s;
        return r;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        // Lemire's multiply-shift; bias is negligible for the ranges used here.
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    double normal(double mean = 0.0, double sd = 1.0) {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        return mean + sd * z;
    }

    double exponential(double rate) {
        double u = next_double();
        if (u <= 0.0) u = 0x1.0p-53;
        return -std::log(u) / rate;
    }

    // Knuth's method; fine for the small means used by the generator.
    int poisson(double mean) {
        double limit = std::exp(-mean);
        double p = 1.0;
        int k = 0;
        do {
            ++k;
            p *= next_double();
        } while (p > limit);
        return k - 1;
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Sample m distinct indices from [0, n) by partial Fisher-Yates.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < m && i + 1 < n; ++i) {
            std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(m < n ? m : n);
        return idx;
    }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

private:
    std::uint64_t state_;
};

}  // namespace stopout
