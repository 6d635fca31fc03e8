#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "chausim/errors.hpp"
#include "chausim/protocol.hpp"
#include "chausim/qmath.hpp"

using namespace chausim;
using namespace chausim::protocol;

namespace {

ProtocolParams uniform5() {
    return ProtocolParams::uniform(5, {{"mu", 0.66, 1.0}});
}

}  // namespace

TEST_CASE("pair indexing round trip") {
    for (int L : {4, 5, 8, 16}) {
        for (int idx = 0; idx < pair_count(L); ++idx) {
            SlotPair p = pair_from_index(idx, L);
            CHECK(p.i >= 1);
            CHECK(p.i < p.j);
            CHECK(p.j <= L);
            CHECK(pair_index(p, L) == idx);
        }
    }
    CHECK(pair_count(5) == static_cast<int>(qmath::binom(5, 2)));
    CHECK_THROWS_AS(SlotPair(3, 3), std::invalid_argument);
    CHECK_THROWS_AS(SlotPair(0, 2), std::invalid_argument);
}

TEST_CASE("params validation") {
    CHECK_THROWS_AS(ProtocolParams::uniform(3, {{"mu", 0.5, 1.0}}), std::invalid_argument);
    auto p = uniform5();
    p.pair_weights[3] = -1.0;
    CHECK_THROWS_AS(p.validate_and_normalize(), std::invalid_argument);
    auto q = uniform5();
    q.intensities.clear();
    CHECK_THROWS_AS(q.validate_and_normalize(), std::invalid_argument);
}

TEST_CASE("prepare_packet pair frequencies, uniform L=5") {
    auto params = uniform5();
    CounterRng rng(11, 0);
    const int n = 1000000;
    std::map<int, int> counts;
    int ones = 0;
    for (int i = 0; i < n; ++i) {
        Packet pkt = prepare_packet(rng, params);
        counts[pair_index(pkt.pair, 5)]++;
        ones += pkt.key_bit;
        CHECK(pkt.global_phase >= 0.0);
        CHECK(pkt.global_phase < 2.0 * 3.14159265358979324);
    }
    const double expect = n / 10.0;
    const double sigma = std::sqrt(n * 0.1 * 0.9);
    for (int idx = 0; idx < 10; ++idx)
        CHECK(std::abs(counts[idx] - expect) <= 3.0 * sigma);
    // fair coin for the key bit
    CHECK(std::abs(ones - n / 2.0) <= 3.0 * std::sqrt(n * 0.25));
}

TEST_CASE("prepare_packet degenerate pair distribution") {
    auto params = uniform5();
    std::fill(params.pair_weights.begin(), params.pair_weights.end(), 0.0);
    params.pair_weights[pair_index(SlotPair(1, 3), 5)] = 1.0;
    params.validate_and_normalize();
    CounterRng rng(3, 5);
    for (int i = 0; i < 1000; ++i) CHECK(prepare_packet(rng, params).pair == SlotPair(1, 3));
}

TEST_CASE("bob_setting uniform over pairs") {
    auto params = uniform5();
    CounterRng rng(17, 0);
    const int n = 1000000;
    std::map<int, int> counts;
    for (int i = 0; i < n; ++i) {
        MeasurementSetting ms = bob_setting(rng, params);
        CHECK(ms.delay >= 1);
        CHECK(ms.start_slot + ms.delay <= 5);
        counts[pair_index(ms.pair(), 5)]++;
    }
    const double sigma = std::sqrt(n * 0.1 * 0.9);
    for (int idx = 0; idx < 10; ++idx)
        CHECK(std::abs(counts[idx] - n / 10.0) <= 3.0 * sigma);
}

TEST_CASE("bob_setting fixed delay 4 forces pair (1,5)") {
    auto params = uniform5();
    params.bob_convention = BobConvention::uniform_delay;
    params.delay_weights = {0.0, 0.0, 0.0, 1.0};
    params.validate_and_normalize();
    CounterRng rng(23, 0);
    for (int i = 0; i < 1000; ++i) CHECK(bob_setting(rng, params).pair() == SlotPair(1, 5));
}

TEST_CASE("bob_setting uniform-delay convention, P(pair (1,2)) = 1/16") {
    auto params = uniform5();
    params.bob_convention = BobConvention::uniform_delay;
    // enumerate delay x placement
    double p12 = 0.0;
    for (const auto& [ms, w] : setting_distribution(params))
        if (ms.pair() == SlotPair(1, 2)) p12 += w;
    CHECK(p12 == doctest::Approx(1.0 / 16.0).epsilon(1e-12));

    CounterRng rng(29, 0);
    const int n = 400000;
    int hits = 0;
    for (int i = 0; i < n; ++i)
        if (bob_setting(rng, params).pair() == SlotPair(1, 2)) ++hits;
    CHECK(std::abs(hits - n / 16.0) <= 3.0 * std::sqrt(n * (1.0 / 16) * (15.0 / 16)));
}

TEST_CASE("sift classification") {
    auto kept = sift(SlotPair(1, 3), SlotPair(1, 3), 0, 0);
    CHECK(kept.kept);
    CHECK_FALSE(kept.error);
    CHECK(kept.overlap == PairOverlap::matched);

    auto err = sift(SlotPair(1, 3), SlotPair(1, 3), 0, 1);
    CHECK(err.kept);
    CHECK(err.error);

    auto disjoint = sift(SlotPair(1, 3), SlotPair(2, 4), 0, 0);
    CHECK_FALSE(disjoint.kept);
    CHECK(disjoint.overlap == PairOverlap::disjoint);

    auto partial = sift(SlotPair(1, 3), SlotPair(1, 4), 1, 0);
    CHECK_FALSE(partial.kept);
    CHECK(partial.overlap == PairOverlap::partial);
}

TEST_CASE("sift is symmetric in pair order and deterministic") {
    for (int L : {4, 5}) {
        for (int a = 0; a < pair_count(L); ++a)
            for (int b = 0; b < pair_count(L); ++b) {
                SlotPair pa = pair_from_index(a, L), pb = pair_from_index(b, L);
                auto r1 = sift(pa, pb, 0, 1);
                auto r2 = sift(pb, pa, 0, 1);
                CHECK(r1.kept == r2.kept);
                CHECK(r1.overlap == r2.overlap);
                auto r3 = sift(pa, pb, 0, 1);
                CHECK(r1.kept == r3.kept);
            }
    }
}

namespace {

// tally with identical counts in every matched cell and every disjoint cell
SiftTally synthetic_tally(const ProtocolParams& params, std::uint64_t m_sent,
                          std::uint64_t m_det, std::uint64_t m_err, std::uint64_t d_sent,
                          std::uint64_t d_det) {
    SiftTally t = SiftTally::empty(params);
    const int P = pair_count(params.L);
    for (int a = 0; a < P; ++a)
        for (int b = 0; b < P; ++b) {
            auto ov = classify_overlap(pair_from_index(a, params.L), pair_from_index(b, params.L));
            auto& cell = t.cell(0, a, b);
            if (ov == PairOverlap::matched) cell = {m_sent, m_det, m_err};
            else if (ov == PairOverlap::disjoint) cell = {d_sent, d_det, 0};
            else cell = {m_sent, 0, 0};
        }
    return t;
}

}  // namespace

TEST_CASE("estimate: ideal lossless packets") {
    auto params = uniform5();
    auto t = synthetic_tally(params, 1000, 500, 0, 1000, 0);
    auto est = estimate(t, params);
    CHECK(est.signal().Q.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(est.signal().Q_prime.value == 0.0);
    REQUIRE(est.signal().E.has_value());
    CHECK(est.signal().E->value == 0.0);
}

TEST_CASE("estimate: dark-count-driven detections give Q = Q' = d") {
    auto params = uniform5();
    const double d = 2.6e-6;
    const std::uint64_t sent = 100000000;
    const auto det = static_cast<std::uint64_t>(d * sent);
    auto t = synthetic_tally(params, sent, det, det / 2, sent, det);
    auto est = estimate(t, params);
    CHECK(est.signal().Q.value == doctest::Approx(d).epsilon(1e-6));
    CHECK(est.signal().Q_prime.value == doctest::Approx(d).epsilon(1e-6));
    CHECK(est.signal().E->value == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("estimate: measured 50 km aggregates reproduce exactly") {
    // counts chosen so detected/sent and errors/detected are the decimal
    // values with no remainder
    auto params = uniform5();
    const std::uint64_t m_sent = 250000000, m_det = 1090000, m_err = 19947;
    const std::uint64_t d_sent = 100000000, d_det = 1100;
    auto t = synthetic_tally(params, m_sent, m_det, m_err, d_sent, d_det);
    auto est = estimate(t, params);
    CHECK(est.signal().Q.value == doctest::Approx(4.36e-3).epsilon(1e-14));
    CHECK(est.signal().Q_prime.value == doctest::Approx(1.10e-5).epsilon(1e-14));
    CHECK(est.signal().E->value == doctest::Approx(0.0183).epsilon(1e-14));
    // binomial standard errors are positive and sane
    CHECK(est.signal().Q.std_error > 0.0);
    CHECK(est.signal().Q.std_error < 1e-4);
}

TEST_CASE("estimate: zero-trial conditionals are an error") {
    auto params = uniform5();
    auto t = synthetic_tally(params, 1000, 10, 0, 1000, 0);
    t.cell(0, 0, 0).sent = 0;  // no trials for matched (1,2)
    CHECK_THROWS_AS(estimate(t, params), UndefinedEstimator);
}

TEST_CASE("estimate: no matched detections leaves E absent") {
    auto params = uniform5();
    auto t = synthetic_tally(params, 1000, 0, 0, 1000, 0);
    auto est = estimate(t, params);
    CHECK_FALSE(est.signal().E.has_value());
    CHECK(est.signal().Q.value == 0.0);
}

TEST_CASE("tally merge is commutative and associative") {
    auto params = uniform5();
    auto a = synthetic_tally(params, 10, 4, 1, 7, 2);
    auto b = synthetic_tally(params, 3, 2, 0, 5, 1);
    auto c = synthetic_tally(params, 8, 8, 4, 1, 0);
    a.total_packets = 100;
    b.total_packets = 50;
    c.total_packets = 10;

    auto ab = a;
    ab.merge(b);
    auto ba = b;
    ba.merge(a);
    CHECK(ab == ba);

    auto ab_c = ab;
    ab_c.merge(c);
    auto bc = b;
    bc.merge(c);
    auto a_bc = a;
    a_bc.merge(bc);
    CHECK(ab_c == a_bc);
    CHECK(ab_c.total_packets == 160);

    auto other = SiftTally::empty(ProtocolParams::uniform(4, {{"mu", 0.5, 1.0}}));
    CHECK_THROWS_AS(ab.merge(other), std::invalid_argument);
}
