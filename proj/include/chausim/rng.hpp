#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace chausim {

// Counter-based random stream (SplitMix64 finalizer over a keyed counter).
// Each (seed, stream) pair yields an independent sequence whose i-th output
// depends only on (seed, stream, i). Simulations that assign one stream per
// trial are therefore invariant under any partitioning of trials across
// workers, which is what makes bit-reproducible parallel runs possible.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix(mix(seed + 0x9E3779B97F4A7C15ull) ^
                   mix(stream + 0xD1B54A32D192ED03ull))) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ull); }

    // uniform in [0, 1)
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_unit() < p; }

    // uniform integer in [0, n)
    std::uint32_t next_below(std::uint32_t n) {
        return static_cast<std::uint32_t>(next_u64() % n);
    }

    // index into a normalized weight table (linear scan; tables here are tiny)
    std::size_t categorical(const double* weights, std::size_t n) {
        double u = next_unit();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return n - 1;
    }

    // Poisson sample by inverse-product method; fine for means of order 1
    unsigned poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        double prod = 1.0;
        unsigned n = 0;
        do {
            prod *= next_unit();
            if (prod < limit) return n;
            ++n;
        } while (n < 10000);
        return n;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace chausim
