#include "chausim/montecarlo.hpp"

#include <omp.h>

#include <cstdio>
#include <cmath>
#include <stdexcept>

#include "chausim/errors.hpp"
#include "chausim/version.hpp"

namespace chausim::mc {

using protocol::MeasurementSetting;
using protocol::Packet;
using protocol::PairOverlap;
using protocol::SiftTally;

void RunConfig::validate() const {
    if (n_packets < 1) throw std::invalid_argument("n_packets must be >= 1");
    params.check();
    devices.validate();
    if (const auto* atk = std::get_if<eve::CollectiveAttack>(&attack)) {
        if (atk->L() != params.L)
            throw std::invalid_argument("attack dimension does not match packet length");
        atk->validate();
    }
}

namespace {

struct EngineContext {
    const RunConfig& cfg;
    double t_optical = 1.0;  // fiber + interferometer insertion loss
    std::array<double, 2> dark{};
    bool afterpulse_on = false;
    // collective attack: per (alice pair, key bit), port probabilities for
    // every bob pair
    std::vector<std::vector<std::array<double, 2>>> attack_ports;

    explicit EngineContext(const RunConfig& c) : cfg(c) {
        const auto& dev = cfg.devices;
        t_optical = devices::transmittance(
                        dev.channel,
                        dev.interferometer.present ? dev.interferometer.insertion_loss_db : 0.0)
                        .value();
        dark = {dev.detector.dark_channel(0), dev.detector.dark_channel(1)};
        afterpulse_on = dev.detector.afterpulse_enabled();
        if (const auto* atk = std::get_if<eve::CollectiveAttack>(&cfg.attack)) {
            const int P = protocol::pair_count(cfg.params.L);
            attack_ports.resize(static_cast<std::size_t>(P) * 2);
            for (int a = 0; a < P; ++a)
                for (int k = 0; k < 2; ++k)
                    attack_ports[static_cast<std::size_t>(a) * 2 + k] = eve::bob_port_probabilities(
                        *atk, protocol::pair_from_index(a, cfg.params.L), k);
        }
    }
};

struct Intrinsic {
    Packet pkt;
    MeasurementSetting ms;
    // bit s set = click at slot s on that channel (intrinsic only)
    std::array<std::uint32_t, 2> clicks{};
};

// Everything intrinsic to one packet: Alice's draws, Bob's setting, and the
// detector clicks before any after-pulse injection. Pure function of the
// packet index given the run seed.
Intrinsic simulate_intrinsic(const EngineContext& ctx, CounterRng& rng) {
    const auto& cfg = ctx.cfg;
    const int L = cfg.params.L;
    Intrinsic out;
    out.pkt = protocol::prepare_packet(rng, cfg.params);
    out.ms = protocol::bob_setting(rng, cfg.params);
    const double mu = cfg.params.intensities[out.pkt.intensity_index].mean_photons;
    const int gate = out.ms.pair().j;

    const bool no_attack = std::holds_alternative<NoAttack>(cfg.attack);
    bool coherent_path = no_attack;
    unsigned n_photons = 0;

    if (!no_attack) {
        n_photons = cfg.devices.source.photon_number == devices::SourceModel::PhotonNumber::single
                        ? 1u
                        : rng.poisson(mu);
        if (n_photons >= 2) coherent_path = true;  // multi-photon packets bypass the attack
    }

    if (coherent_path) {
        const double mean = no_attack ? mu : static_cast<double>(n_photons);
        const bool flip = rng.bernoulli(cfg.devices.channel.misalignment);
        auto field = devices::slot_amplitudes(out.pkt, mean, cfg.devices.source, L);
        for (int s = 1; s <= L; ++s) {
            auto ports =
                cfg.devices.interferometer.present
                    ? devices::output_port_intensities(field, s, out.ms.delay, flip,
                                                       cfg.devices.interferometer)
                    : std::array<double, 2>{field.intensity[s], 0.0};
            auto clicks = devices::detect_slot({ports[0] * ctx.t_optical, ports[1] * ctx.t_optical},
                                               cfg.devices.detector, rng);
            if (clicks[0]) out.clicks[0] |= 1u << s;
            if (clicks[1]) out.clicks[1] |= 1u << s;
        }
        return out;
    }

    // attack path, 0 or 1 photon: Bob's projection abstraction, clicks only
    // at the gated interference slot; optical losses as one survival factor
    std::array<double, 2> q{0.0, 0.0};
    if (n_photons == 1) {
        if (std::holds_alternative<InterceptResend>(cfg.attack)) {
            const int t = rng.bernoulli(0.5) ? out.pkt.pair.i : out.pkt.pair.j;
            const auto bp = out.ms.pair();
            if (t == bp.i || t == bp.j) q = {0.25, 0.25};
        } else {
            const int a = protocol::pair_index(out.pkt.pair, L);
            const int b = protocol::pair_index(out.ms.pair(), L);
            q = ctx.attack_ports[static_cast<std::size_t>(a) * 2 + out.pkt.key_bit]
                               [static_cast<std::size_t>(b)];
        }
    }
    const double survival = ctx.t_optical * cfg.devices.detector.efficiency;
    const double u = rng.next_unit();
    bool photon0 = u < q[0] * survival;
    bool photon1 = !photon0 && u < (q[0] + q[1]) * survival;
    if (photon0 || rng.bernoulli(ctx.dark[0])) out.clicks[0] |= 1u << gate;
    if (photon1 || rng.bernoulli(ctx.dark[1])) out.clicks[1] |= 1u << gate;
    return out;
}

// After-pulse clicks that packet `index` injects into the next packet window:
// one candidate per intrinsic click, target gate uniform. Seeded only by
// intrinsic clicks (one-step rule) and drawn from the packet's own dedicated
// stream, so the chain never recurses and stays partition-invariant.
std::array<bool, 2> afterpulse_into_gate(std::uint64_t source_index, const EngineContext& ctx,
                                         const Intrinsic& source, int target_gate) {
    std::array<bool, 2> inject{false, false};
    const int L = ctx.cfg.params.L;
    CounterRng rng(ctx.cfg.seed, source_index * 2 + 1);
    for (int ch = 0; ch < 2; ++ch) {
        const double ap = ctx.cfg.devices.detector.afterpulse[ch];
        for (int s = 1; s <= L; ++s) {
            if (!(source.clicks[ch] >> s & 1u)) continue;
            if (rng.bernoulli(ap)) {
                int target = 1 + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(L)));
                if (target == target_gate) inject[ch] = true;
            }
        }
    }
    return inject;
}

void simulate_packet(std::uint64_t index, const EngineContext& ctx, SiftTally& tally) {
    CounterRng rng(ctx.cfg.seed, index * 2);
    Intrinsic cur = simulate_intrinsic(ctx, rng);
    const int gate = cur.ms.pair().j;

    std::array<bool, 2> inject{false, false};
    if (ctx.afterpulse_on && index > 0) {
        CounterRng prev_rng(ctx.cfg.seed, (index - 1) * 2);
        Intrinsic prev = simulate_intrinsic(ctx, prev_rng);
        inject = afterpulse_into_gate(index - 1, ctx, prev, gate);
    }

    const bool c0 = (cur.clicks[0] >> gate & 1u) || inject[0];
    const bool c1 = (cur.clicks[1] >> gate & 1u) || inject[1];

    const int a = protocol::pair_index(cur.pkt.pair, ctx.cfg.params.L);
    const int b = protocol::pair_index(cur.ms.pair(), ctx.cfg.params.L);
    auto& cell = tally.cell(cur.pkt.intensity_index, a, b);
    auto& it = tally.per_intensity[static_cast<std::size_t>(cur.pkt.intensity_index)];
    cell.sent += 1;
    it.sent_total += 1;
    tally.total_packets += 1;

    int bob_bit = -1;
    if (c0 && c1) {
        it.double_clicks += 1;
        bob_bit = rng.bernoulli(0.5) ? 1 : 0;
    } else if (c0) {
        bob_bit = 0;
    } else if (c1) {
        bob_bit = 1;
    }
    if (bob_bit < 0) return;

    cell.detected += 1;
    auto rec = protocol::sift(cur.pkt.pair, cur.ms.pair(), cur.pkt.key_bit, bob_bit);
    if (rec.kept && rec.error) cell.errors += 1;
}

}  // namespace

SiftTally run_serial(const RunConfig& cfg) {
    EngineContext ctx(cfg);
    SiftTally tally = SiftTally::empty(cfg.params);
    for (std::uint64_t p = 0; p < cfg.n_packets; ++p) simulate_packet(p, ctx, tally);
    return tally;
}

SiftTally run_parallel(const RunConfig& cfg, int workers) {
    if (workers <= 0) workers = omp_get_max_threads();
    EngineContext ctx(cfg);
    std::vector<SiftTally> parts(static_cast<std::size_t>(workers), SiftTally::empty(cfg.params));
    bool failed = false;
    std::string error;
    // coarse progress on long runs; thread 0's static share tracks the whole
    const std::uint64_t tick =
        cfg.n_packets >= 20'000'000 ? cfg.n_packets / static_cast<std::uint64_t>(workers) / 10 : 0;

#pragma omp parallel num_threads(workers)
    {
        const int w = omp_get_thread_num();
        std::uint64_t done = 0;
        try {
#pragma omp for schedule(static)
            for (long long p = 0; p < static_cast<long long>(cfg.n_packets); ++p) {
                simulate_packet(static_cast<std::uint64_t>(p), ctx, parts[static_cast<std::size_t>(w)]);
                if (tick && w == 0 && ++done % tick == 0)
                    std::fprintf(stderr, "  ... %.0f%%\n",
                                 100.0 * static_cast<double>(done) * workers /
                                     static_cast<double>(cfg.n_packets));
            }
        } catch (const std::exception& e) {
#pragma omp critical
            {
                failed = true;
                error = e.what();
            }
        }
    }
    if (failed) throw std::runtime_error("worker failed, run aborted: " + error);

    SiftTally tally = SiftTally::empty(cfg.params);
    for (const auto& part : parts) tally.merge(part);
    return tally;
}

RunResult run(const RunConfig& cfg) {
    cfg.validate();
    RunResult result;
    const int workers = cfg.workers <= 0 ? omp_get_max_threads() : cfg.workers;
    result.tally = workers == 1 ? run_serial(cfg) : run_parallel(cfg, workers);
    try {
        result.estimates = protocol::estimate(result.tally, cfg.params);
    } catch (const UndefinedEstimator&) {
        result.estimates.reset();
    }
    result.provenance = {std::string("chausim ") + kVersion, cfg.seed, workers, cfg.n_packets,
                         cfg.config_hash};
    return result;
}

}  // namespace chausim::mc
