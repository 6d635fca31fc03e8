#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chausim/devices.hpp"
#include "chausim/rng.hpp"

using namespace chausim;
using namespace chausim::devices;

TEST_CASE("transmittance closed forms") {
    ChannelModel ch;
    ch.length_km = 50.0;
    CHECK(transmittance(ch, 0.0).value() == doctest::Approx(0.1).epsilon(1e-12));
    ch.length_km = 0.0;
    CHECK(transmittance(ch, 0.0).value() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(transmittance(ch, 2.0).value() == doctest::Approx(0.6309573444801932).epsilon(1e-12));
    CHECK_THROWS_AS(transmittance(ch, -1.0), std::invalid_argument);
}

TEST_CASE("transmittance is multiplicative over segments") {
    CounterRng rng(5, 0);
    for (int i = 0; i < 200; ++i) {
        double a = 200.0 * rng.next_unit(), b = 200.0 * rng.next_unit();
        ChannelModel ca, cb, cab;
        ca.length_km = a;
        cb.length_km = b;
        cab.length_km = a + b;
        double prod = transmittance(ca, 0.0).value() * transmittance(cb, 0.0).value();
        CHECK(std::abs(prod - transmittance(cab, 0.0).value()) <= 1e-12);
    }
}

TEST_CASE("slot_amplitudes splits the packet over the pulse pair") {
    SourceModel src;  // default leakage 1/280
    protocol::Packet pkt{protocol::SlotPair(1, 3), 0, 0, 0.0};
    auto f = slot_amplitudes(pkt, 0.66, src, 5);
    CHECK(f.intensity[1] == doctest::Approx(0.33).epsilon(1e-12));
    CHECK(f.intensity[3] == doctest::Approx(0.33).epsilon(1e-12));
    for (int s : {2, 4, 5})
        CHECK(f.intensity[s] == doctest::Approx(0.33 / 280.0).epsilon(1e-12));
    CHECK(f.rel_phase == 0.0);
    CHECK(f.phase_parity() == 0);

    protocol::Packet minus{protocol::SlotPair(2, 5), 1, 0, 1.0};
    auto g = slot_amplitudes(minus, 0.66, src, 5);
    CHECK(g.phase_parity() == 1);

    auto vac = slot_amplitudes(pkt, 0.0, src, 5);
    for (int s = 1; s <= 5; ++s) CHECK(vac.intensity[s] == 0.0);

    SourceModel clean;
    clean.im_extinction = 0.0;
    auto h = slot_amplitudes(pkt, 0.66, clean, 5);
    for (int s : {2, 4, 5}) CHECK(h.intensity[s] == 0.0);
}

TEST_CASE("interferometer output ports") {
    InterferometerModel ifm;  // 23 dB extinction
    SourceModel clean;
    clean.im_extinction = 0.0;
    protocol::Packet pkt{protocol::SlotPair(1, 3), 0, 0, 0.0};
    auto f = slot_amplitudes(pkt, 0.66, clean, 5);

    // matched delay r=2: output slot 3 combines the two pulses coherently
    auto ports = output_port_intensities(f, 3, 2, false, ifm);
    const double xi = ifm.crosstalk();
    CHECK(ports[0] == doctest::Approx(0.33 * (1.0 - xi)).epsilon(1e-12));
    CHECK(ports[1] == doctest::Approx(0.33 * xi).epsilon(1e-12));
    // dark-port floor sits at the extinction ratio
    CHECK(ports[1] / ports[0] == doctest::Approx(std::pow(10.0, -2.3)).epsilon(1e-9));

    // phase flip swaps the ports
    auto flipped = output_port_intensities(f, 3, 2, true, ifm);
    CHECK(flipped[0] == doctest::Approx(ports[1]).epsilon(1e-12));
    CHECK(flipped[1] == doctest::Approx(ports[0]).epsilon(1e-12));

    // non-interfering slot: both ports equal, quarter of each contribution
    auto satellite = output_port_intensities(f, 1, 2, false, ifm);
    CHECK(satellite[0] == doctest::Approx(0.33 / 4.0).epsilon(1e-12));
    CHECK(satellite[0] == satellite[1]);

    // energy over both ports at the interference slot is half the packet
    CHECK(ports[0] + ports[1] == doctest::Approx(0.33).epsilon(1e-12));
}

TEST_CASE("click probability closed forms") {
    CHECK(click_probability(0.0, 0.204, 0.0) == 0.0);
    CHECK(click_probability(1e9, 0.204, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(click_probability(1.0, 0.204, 2.6e-6) ==
          doctest::Approx(1.0 - (1.0 - 2.6e-6) * std::exp(-0.204)).epsilon(1e-12));
    CHECK(click_probability(1.0, 0.204, 2.6e-6) == doctest::Approx(0.1845).epsilon(1e-3));
    CHECK_THROWS_AS(click_probability(-1.0, 0.2, 0.0), std::invalid_argument);
}

TEST_CASE("click probability monotone in photons, efficiency, dark rate") {
    CounterRng rng(13, 1);
    for (int i = 0; i < 500; ++i) {
        double m = 5.0 * rng.next_unit(), eta = rng.next_unit(), d = rng.next_unit() * 1e-3;
        double dm = 0.1 + rng.next_unit(), de = (1.0 - eta) * rng.next_unit(),
               dd = (1e-3 - d) * rng.next_unit();
        CHECK(click_probability(m + dm, eta, d) >= click_probability(m, eta, d));
        CHECK(click_probability(m, eta + de, d) >= click_probability(m, eta, d));
        CHECK(click_probability(m, eta, d + dd) >= click_probability(m, eta, d));
    }
}

TEST_CASE("detect_slot sampling matches its probability") {
    DetectorModel det;  // 20.4%, 2.6e-6 total dark
    CounterRng rng(31, 2);
    const int n = 200000;
    int clicks0 = 0;
    for (int i = 0; i < n; ++i) {
        auto c = detect_slot({0.5, 0.0}, det, rng);
        clicks0 += c[0];
    }
    const double p = click_probability(0.5, det.efficiency, det.dark_channel(0));
    CHECK(std::abs(clicks0 - n * p) <= 3.0 * std::sqrt(n * p * (1.0 - p)));
}

TEST_CASE("device validation") {
    DetectorModel det;
    det.efficiency = 1.5;
    CHECK_THROWS_AS(det.validate(), std::invalid_argument);
    SourceModel src;
    src.im_extinction = 1.0;
    CHECK_THROWS_AS(src.validate(), std::invalid_argument);
    ChannelModel ch;
    ch.attenuation_db_per_km = 0.0;
    CHECK_THROWS_AS(ch.validate(), std::invalid_argument);
}
