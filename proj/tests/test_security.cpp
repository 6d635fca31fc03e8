#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "chausim/errors.hpp"
#include "chausim/protocol.hpp"
#include "chausim/qmath.hpp"
#include "chausim/rng.hpp"
#include "chausim/security.hpp"
#include "chausim/tally_io.hpp"

using namespace chausim;
using namespace chausim::security;

#ifndef CHAUSIM_DATA_DIR
#define CHAUSIM_DATA_DIR "data"
#endif

TEST_CASE("information bound reference values") {
    // measured 50 km gains
    const double bound = iae_bound(4.36e-3, 1.10e-5);
    CHECK(bound == doctest::Approx(0.01396755969328452).epsilon(1e-12));
    CHECK(std::abs(bound - 0.014) < 1e-3);
    // no basis-escaping events: nothing to learn
    CHECK(iae_bound(0.5, 0.0) == 0.0);
    // argument clips at one half: a full bit, no key
    CHECK(iae_bound(0.2, 0.2) == 1.0);
    CHECK(iae_bound(0.2, 0.5) == 1.0);
    CHECK_THROWS_AS(iae_bound(0.0, 0.1), std::domain_error);
    CHECK_THROWS_AS(iae_bound(0.1, -0.1), std::domain_error);
}

TEST_CASE("information bound monotonicity") {
    CounterRng rng(3, 3);
    for (int i = 0; i < 2000; ++i) {
        double q = 1e-6 + rng.next_unit() * 0.1;
        double qp = rng.next_unit() * q;  // stay below the clip
        double dq = qp * rng.next_unit() * 0.5;
        CHECK(iae_bound(q, qp + dq * 0.5) >= iae_bound(q, qp) - 1e-15);
        CHECK(iae_bound(q + dq, qp) <= iae_bound(q, qp) + 1e-15);
    }
}

TEST_CASE("sifted key rate") {
    const double iae = iae_bound(4.36e-3, 1.10e-5);
    CHECK(keyrate_sifted(0.0183, iae) == doctest::Approx(0.8542463508472684).epsilon(1e-9));
    CHECK(keyrate_sifted(0.0, 0.0) == 1.0);
    CHECK(keyrate_sifted(0.5, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS_AS(keyrate_sifted(1.2, 0.0), std::domain_error);
    CHECK_THROWS_AS(keyrate_sifted(0.1, 0.0, 0.5), std::domain_error);
    // strictly decreasing in E on (0, 1/2)
    double prev = keyrate_sifted(0.01, 0.1);
    for (double e = 0.02; e < 0.5; e += 0.01) {
        double r = keyrate_sifted(e, 0.1);
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("aggregation identity: matrix ratio equals Q'/(2Q)") {
    CounterRng rng(8, 1);
    for (int L : {4, 5, 6, 8}) {
        const int P = protocol::pair_count(L);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> p(static_cast<std::size_t>(P) * P);
            for (auto& x : p) x = rng.next_unit();
            double matched = 0.0, disjoint = 0.0;
            int disjoint_cells = 0;
            for (int a = 0; a < P; ++a)
                for (int b = 0; b < P; ++b) {
                    auto ov = protocol::classify_overlap(protocol::pair_from_index(a, L),
                                                         protocol::pair_from_index(b, L));
                    if (ov == protocol::PairOverlap::matched)
                        matched += p[static_cast<std::size_t>(a) * P + b];
                    else if (ov == protocol::PairOverlap::disjoint) {
                        disjoint += p[static_cast<std::size_t>(a) * P + b];
                        ++disjoint_cells;
                    }
                }
            CHECK(disjoint_cells == P * (L - 2) * (L - 3) / 2);
            // ratio straight from the matrix sums
            double direct = disjoint / ((L - 2) * (L - 3) * matched);
            // ratio through the aggregated means
            double Q = matched / P;
            double Qp = disjoint / (P * ((L - 2) * (L - 3) / 2));
            CHECK(std::abs(direct - Qp / (2.0 * Q)) <= 1e-12);
        }
    }
}

TEST_CASE("decoy inputs validation") {
    DecoyInputs in;
    in.signal = {"mu", 0.66, 0.98, 4.36e-3, 1.1e-5, 0.0183};
    in.decoy1 = {"nu1", 0.05, 0.01, 3.33e-4, 3.23e-6, std::nullopt};
    in.decoy2 = {"nu2", 0.0016, 0.01, 1.34e-5, 2.61e-6, std::nullopt};
    CHECK_NOTHROW(in.validate());

    auto bad = in;
    bad.decoy1.intensity = 0.7;  // nu1 > mu
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = in;
    bad.signal.intensity = 0.05;  // nu1 + nu2 >= mu
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = in;
    bad.signal.E.reset();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

namespace {

double poisson_pmf(double mean, int n) {
    double logp = -mean + n * std::log(mean) - std::lgamma(n + 1.0);
    return std::exp(logp);
}

DecoyInputs synthetic_inputs(double mu, double nu1, double nu2,
                             const std::vector<double>& yields,
                             const std::vector<double>& disjoint_yields) {
    auto gain = [&](double k, const std::vector<double>& y) {
        double q = 0.0;
        for (std::size_t n = 0; n < y.size(); ++n)
            q += (k > 0.0 ? poisson_pmf(k, static_cast<int>(n)) : (n == 0 ? 1.0 : 0.0)) * y[n];
        return q;
    };
    DecoyInputs in;
    in.signal = {"mu", mu, 0.98, gain(mu, yields), gain(mu, disjoint_yields), 0.02};
    in.decoy1 = {"nu1", nu1, 0.01, gain(nu1, yields), gain(nu1, disjoint_yields), std::nullopt};
    in.decoy2 = {"nu2", nu2, 0.01, gain(nu2, yields), gain(nu2, disjoint_yields), std::nullopt};
    return in;
}

}  // namespace

TEST_CASE("decoy bounds against a known yield model") {
    // Y_n = 1 - (1-Y1)^n: no vacuum yield, known single-photon yield
    const double Y1 = 0.08;
    std::vector<double> yields(40), disjoint(40);
    for (std::size_t n = 0; n < yields.size(); ++n) {
        yields[n] = 1.0 - std::pow(1.0 - Y1, static_cast<double>(n));
        disjoint[n] = 1.0 - std::pow(1.0 - 1e-4, static_cast<double>(n));
    }
    auto in = synthetic_inputs(0.6, 0.08, 0.01, yields, disjoint);
    auto est = decoy_bounds(in);
    CHECK(est.Y1_lower <= Y1 + 1e-12);
    CHECK(est.Y1_lower >= Y1 * 0.95);  // gap below 5%
    CHECK(est.Y1p_upper >= 1e-4 - 1e-12);
    CHECK(est.Q1_lower == doctest::Approx(0.6 * std::exp(-0.6) * est.Y1_lower).epsilon(1e-12));
}

TEST_CASE("vacuum decoy recovers the zero-photon yield exactly") {
    const double dark = 5.2e-6;
    std::vector<double> yields(40), disjoint(40, 0.0);
    for (std::size_t n = 0; n < yields.size(); ++n)
        yields[n] = 1.0 - (1.0 - dark) * std::pow(1.0 - 0.05, static_cast<double>(n));
    auto in = synthetic_inputs(0.6, 0.05, 0.0, yields, disjoint);
    auto est = decoy_bounds(in);
    CHECK(est.Y0_lower == doctest::Approx(dark).epsilon(1e-9));
}

TEST_CASE("decoy error rates tighten the single-photon error bound") {
    // yields with a known single-photon error rate, vacuum errors at 1/2
    const double Y1 = 0.05, e1 = 0.03, Y0 = 4e-6;
    std::vector<double> yields(40), errors(40), disjoint(40, 0.0);
    for (std::size_t n = 0; n < yields.size(); ++n) {
        double yn = 1.0 - (1.0 - Y0) * std::pow(1.0 - Y1, static_cast<double>(n));
        yields[n] = yn;
        // error events: darks at 1/2 plus misalignment-like e1 per photon term
        errors[n] = n == 0 ? 0.5 * yn : e1 * yn;
    }
    auto gain = [&](double k, const std::vector<double>& y) {
        double q = 0.0;
        for (std::size_t n = 0; n < y.size(); ++n)
            q += (k > 0.0 ? poisson_pmf(k, static_cast<int>(n)) : (n == 0 ? 1.0 : 0.0)) * y[n];
        return q;
    };
    auto inputs_with = [&](bool with_decoy_errors) {
        DecoyInputs in;
        auto fill = [&](IntensityPoint& p, const char* label, double k, double prob, bool err) {
            p.label = label;
            p.intensity = k;
            p.probability = prob;
            p.Q = gain(k, yields);
            p.Q_prime = gain(k, disjoint);
            if (err) p.E = gain(k, errors) / p.Q;
        };
        fill(in.signal, "mu", 0.6, 0.98, true);
        fill(in.decoy1, "nu1", 0.08, 0.01, with_decoy_errors);
        fill(in.decoy2, "nu2", 0.01, 0.01, with_decoy_errors);
        return in;
    };
    auto loose = decoy_bounds(inputs_with(false));
    auto tight = decoy_bounds(inputs_with(true));
    CHECK(loose.e1_upper >= e1 - 1e-9);
    CHECK(tight.e1_upper >= e1 - 1e-9);
    CHECK(tight.e1_upper <= loose.e1_upper + 1e-12);
}

TEST_CASE("crossing bounds surface as infeasible statistics") {
    DecoyInputs in;
    in.signal = {"mu", 0.66, 0.98, 4.36e-3, 1.1e-5, 0.0183};
    in.decoy1 = {"nu1", 0.05, 0.01, 3.33e-4, 1.0e-6, std::nullopt};
    in.decoy2 = {"nu2", 0.0016, 0.01, 1.34e-5, 1.0e-3, std::nullopt};  // absurd disjoint gain
    CHECK_THROWS_AS(decoy_bounds(in), InfeasibleStatistics);
}

TEST_CASE("measured 100 km dataset through the pipeline") {
    auto file = io::decoy_from_json(io::read_file(std::string(CHAUSIM_DATA_DIR) +
                                                  "/table1/km100.json"));
    auto est = decoy_bounds(file.inputs);
    CHECK(est.Y1_lower > 0.0);
    auto kr = keyrate_packet(file.inputs, est, file.L, file.options);
    CHECK(kr.R_packet >= 1.20e-4 / 2.0);
    CHECK(kr.R_packet <= 1.20e-4 * 2.0);
}

TEST_CASE("high-error dataset still yields key at the 1e-5 scale") {
    auto file = io::decoy_from_json(io::read_file(std::string(CHAUSIM_DATA_DIR) +
                                                  "/table1/km050_high_error.json"));
    auto kr = keyrate_packet(file.inputs, decoy_bounds(file.inputs), file.L, file.options);
    CHECK(kr.R_packet_raw > 1e-5);
    CHECK(kr.R_packet_raw < 1e-4);
}

TEST_CASE("per-packet rate conventions") {
    auto file = io::decoy_from_json(io::read_file(std::string(CHAUSIM_DATA_DIR) +
                                                  "/table1/km050.json"));
    auto est = decoy_bounds(file.inputs);
    KeyRateOptions folded = file.options;
    KeyRateOptions conditional = file.options;
    conditional.convention = SiftConvention::conditional;
    auto rf = keyrate_packet(file.inputs, est, file.L, folded);
    auto rc = keyrate_packet(file.inputs, est, file.L, conditional);
    CHECK(rf.sift_factor == 1.0);
    CHECK(rc.sift_factor == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(rc.R_packet == doctest::Approx(rf.R_packet / 10.0).epsilon(1e-12));
    // negative raw rates are clamped for reporting, raw retained
    DecoyInputs noisy = file.inputs;
    noisy.signal.E = 0.45;
    auto rn = keyrate_packet(noisy, decoy_bounds(noisy), file.L, folded);
    CHECK(rn.R_packet == 0.0);
    CHECK(rn.R_packet_raw < 0.0);
}

TEST_CASE("vanishing disjoint gains report zero adversary information") {
    DecoyInputs in;
    in.signal = {"mu", 0.66, 0.98, 4.36e-3, 0.0, 0.0183};
    in.decoy1 = {"nu1", 0.05, 0.01, 3.33e-4, 0.0, std::nullopt};
    in.decoy2 = {"nu2", 0.0016, 0.01, 1.34e-5, 0.0, std::nullopt};
    auto est = decoy_bounds(in);
    CHECK(est.Y1p_upper == 0.0);
    auto kr = keyrate_packet(in, est, 5);
    CHECK(kr.iae_signal == 0.0);
    CHECK(kr.iae_single_photon == 0.0);
}

TEST_CASE("comparison rate for round-robin DPS") {
    CHECK(rrdps_keyrate(0.0, 5) == doctest::Approx(0.18872187554086717).epsilon(1e-12));
    CHECK(rrdps_keyrate(0.0, 1000000) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(rrdps_keyrate(0.5, 5) <= 0.0);
    CHECK(rrdps_keyrate(0.5, 64) <= 0.0);
    CHECK_THROWS_AS(rrdps_keyrate(0.1, 2), std::domain_error);
}
