#include "chausim/qmath.hpp"

#include <cmath>

namespace chausim::qmath {

BitsPerUse::BitsPerUse(double v) : v_(v) {
    if (!std::isfinite(v))
        throw std::domain_error("bits-per-use value must be finite");
}

namespace {

inline double entropy_term(double t) {
    if (t < 1e-12) return t <= 0.0 ? 0.0 : t * std::log2(1.0 / t);
    return -t * std::log2(t);
}

}  // namespace

double h2(double x) {
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error("h2 argument outside [0,1]: " + std::to_string(x));
    return entropy_term(x) + entropy_term(1.0 - x);
}

std::uint64_t binom(unsigned n, unsigned k) {
    if (k > n) throw std::domain_error("binom: k > n");
    if (k > n - k) k = n - k;
    unsigned __int128 result = 1;
    for (unsigned i = 1; i <= k; ++i) {
        // result*(n-k+i) is divisible by i at every step; 128-bit intermediate
        // keeps values like binom(64,32) exact
        result = result * (n - k + i) / i;
        if (result > static_cast<unsigned __int128>(UINT64_MAX))
            throw std::overflow_error("binom: 64-bit overflow");
    }
    return static_cast<std::uint64_t>(result);
}

double clip(double x, double lo, double hi) {
    if (!(lo <= hi)) throw std::domain_error("clip: lo > hi");
    return std::min(hi, std::max(lo, x));
}

}  // namespace chausim::qmath
