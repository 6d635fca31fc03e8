#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace chausim::qmath {

// Value constrained to [0,1]. Construction outside the range throws.
class Probability {
public:
    Probability() = default;
    explicit Probability(double v) : v_(v) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::domain_error("probability outside [0,1]: " + std::to_string(v));
    }
    double value() const { return v_; }
    operator double() const { return v_; }

private:
    double v_ = 0.0;
};

// Information rate in bits per use. May be negative, must be finite.
class BitsPerUse {
public:
    BitsPerUse() = default;
    explicit BitsPerUse(double v);
    double value() const { return v_; }
    operator double() const { return v_; }

private:
    double v_ = 0.0;
};

// Binary entropy h2(x) = -x log2 x - (1-x) log2 (1-x), with h2(0) = h2(1) = 0.
// Evaluated as t*log2(1/t) per term with a branch near 0 so arguments down at
// the 1e-3..1e-12 scale stay accurate. Throws std::domain_error outside [0,1].
double h2(double x);

inline BitsPerUse binary_entropy(Probability x) { return BitsPerUse(h2(x.value())); }

// Exact binomial coefficient, overflow-checked. Throws std::domain_error for
// k > n and std::overflow_error when the value does not fit 64 bits.
std::uint64_t binom(unsigned n, unsigned k);

// min(hi, max(lo, x)); requires lo <= hi.
double clip(double x, double lo, double hi);

}  // namespace chausim::qmath
