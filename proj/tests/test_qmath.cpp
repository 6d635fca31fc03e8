#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chausim/qmath.hpp"
#include "chausim/rng.hpp"

using namespace chausim;
using qmath::binom;
using qmath::clip;
using qmath::h2;

TEST_CASE("binary entropy reference values") {
    CHECK(h2(0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(h2(0.0) == 0.0);
    CHECK(h2(1.0) == 0.0);
    // direct evaluation at the measured 50 km signal error rate
    CHECK(h2(0.0183) == doctest::Approx(0.13178608945944706).epsilon(1e-12));
}

TEST_CASE("binary entropy domain") {
    CHECK_THROWS_AS(h2(-0.01), std::domain_error);
    CHECK_THROWS_AS(h2(1.01), std::domain_error);
    CHECK_THROWS_AS(qmath::Probability(1.5), std::domain_error);
    CHECK_THROWS_AS(qmath::Probability(-0.1), std::domain_error);
    CHECK_THROWS_AS(qmath::BitsPerUse(std::nan("")), std::domain_error);
}

TEST_CASE("binary entropy symmetry and range properties") {
    CounterRng rng(7, 0);
    for (int i = 0; i < 20000; ++i) {
        double x = rng.next_unit();
        CHECK(std::abs(h2(x) - h2(1.0 - x)) <= 1e-13);
        if (x > 0.0 && x < 1.0) {
            CHECK(h2(x) > 0.0);
            CHECK(h2(x) <= 1.0);
        }
    }
    // tiny arguments stay accurate (x log2(1/x) form)
    CHECK(h2(1e-3) == doctest::Approx(0.011407757737461138).epsilon(1e-12));
    CHECK(h2(1e-10) == doctest::Approx(3.4661976109059578e-09).epsilon(1e-9));
    // maximum only at 1/2
    CHECK(h2(0.4999) < 1.0);
    CHECK(h2(0.5) == 1.0);
}

TEST_CASE("binomial coefficients") {
    CHECK(binom(5, 2) == 10);   // pair count denominator for L=5
    CHECK(binom(3, 2) == 3);    // disjoint-pair denominator factor
    CHECK(binom(7, 0) == 1);
    CHECK(binom(0, 0) == 1);
    CHECK_THROWS_AS(binom(3, 4), std::domain_error);
    CHECK_THROWS_AS(binom(100, 50), std::overflow_error);
    CHECK(binom(64, 32) == 1832624140942590534ULL);
}

TEST_CASE("binomial Pascal recurrence up to n = 64") {
    for (unsigned n = 2; n <= 64; ++n)
        for (unsigned k = 1; k < n; ++k)
            CHECK(binom(n, k) == binom(n - 1, k - 1) + binom(n - 1, k));
}

TEST_CASE("clip") {
    CHECK(clip(1.3, 0.0, 0.5) == 0.5);
    CHECK(clip(-0.1, 0.0, 1.0) == 0.0);
    CHECK(clip(0.2, 0.0, 1.0) == 0.2);
    CHECK_THROWS_AS(clip(0.0, 1.0, 0.0), std::domain_error);
}
