#include "chausim/analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace chausim::analytic {

namespace {

using devices::click_probability;
using protocol::MeasurementSetting;
using protocol::PairOverlap;
using protocol::SlotPair;

struct Context {
    const protocol::ProtocolParams& params;
    const devices::DeviceChain& dev;
    double t_optical;  // fiber + interferometer insertion loss
    double eta_det;
    std::array<double, 2> dark;
    double e_mis;
    std::vector<std::pair<MeasurementSetting, double>> settings;
};

// per-channel click probabilities at one output slot, for a fixed branch
std::array<double, 2> slot_click_probs(const Context& ctx, const devices::SlotField& field,
                                       int out_slot, int delay, bool flip) {
    auto ports = ctx.dev.interferometer.present
                     ? devices::output_port_intensities(field, out_slot, delay, flip,
                                                        ctx.dev.interferometer)
                     : std::array<double, 2>{field.intensity[out_slot], 0.0};
    return {click_probability(ports[0] * ctx.t_optical, ctx.eta_det, ctx.dark[0]),
            click_probability(ports[1] * ctx.t_optical, ctx.eta_det, ctx.dark[1])};
}

}  // namespace

const PairEntry& ExpectedStatistics::entry(int cls, int alice_idx, int bob_idx) const {
    const int P = protocol::pair_count(L);
    return per_intensity.at(cls).matrix.at(static_cast<std::size_t>(alice_idx) * P + bob_idx);
}

ExpectedStatistics expected_stats(const protocol::ProtocolParams& params,
                                  const devices::DeviceChain& devices_in) {
    params.check();
    devices_in.validate();
    if (devices_in.interferometer.present && devices_in.interferometer.crosstalk() >= 1.0)
        throw std::invalid_argument("interferometer crosstalk must be < 1");

    Context ctx{params,
                devices_in,
                devices::transmittance(devices_in.channel,
                                       devices_in.interferometer.present
                                           ? devices_in.interferometer.insertion_loss_db
                                           : 0.0)
                    .value(),
                devices_in.detector.efficiency,
                {devices_in.detector.dark_channel(0), devices_in.detector.dark_channel(1)},
                devices_in.channel.misalignment,
                protocol::setting_distribution(params)};

    const int L = params.L;
    const int P = protocol::pair_count(L);

    std::vector<double> setting_weight(static_cast<std::size_t>(P), 0.0);
    for (const auto& [ms, w] : ctx.settings)
        setting_weight[static_cast<std::size_t>(protocol::pair_index(ms.pair(), L))] += w;

    ExpectedStatistics out;
    out.L = L;
    out.signal_index = params.signal_index();
    out.per_intensity.resize(params.intensities.size());

    // Pass 1: expected intrinsic clicks per packet and channel for each class,
    // averaged over pair, key bit, Bob's setting and the misalignment branch.
    // Their class-weighted marginal drives the after-pulse injection rate
    // (after-pulses are seeded only by the previous packet's intrinsic clicks).
    for (std::size_t ci = 0; ci < params.intensities.size(); ++ci) {
        const auto& cls = params.intensities[ci];
        auto& ie = out.per_intensity[ci];
        ie.label = cls.label;
        ie.mean_photons = cls.mean_photons;
        for (int a = 0; a < P; ++a) {
            SlotPair ap = protocol::pair_from_index(a, L);
            double wa = params.pair_weights[a];
            for (int k = 0; k < 2; ++k) {
                protocol::Packet pkt{ap, k, 0, 0.0};
                auto field = devices::slot_amplitudes(pkt, cls.mean_photons, devices_in.source, L);
                for (const auto& [ms, wms] : ctx.settings) {
                    for (int flip = 0; flip < 2; ++flip) {
                        double w = wa * 0.5 * wms * (flip ? ctx.e_mis : 1.0 - ctx.e_mis);
                        if (w == 0.0) continue;
                        for (int s = 1; s <= L; ++s) {
                            auto c = slot_click_probs(ctx, field, s, ms.delay, flip != 0);
                            ie.expected_clicks[0] += w * c[0];
                            ie.expected_clicks[1] += w * c[1];
                        }
                    }
                }
            }
        }
    }
    for (int ch = 0; ch < 2; ++ch) {
        double marginal = 0.0;
        for (std::size_t ci = 0; ci < params.intensities.size(); ++ci)
            marginal += params.intensities[ci].probability * out.per_intensity[ci].expected_clicks[ch];
        out.afterpulse_inject[ch] = marginal * devices_in.detector.afterpulse[ch] / L;
    }

    // Pass 2: detection and error probabilities at the gated interference slot
    // per (class, sent pair, setting pair), with the injection folded in.
    for (std::size_t ci = 0; ci < params.intensities.size(); ++ci) {
        const auto& cls = params.intensities[ci];
        auto& ie = out.per_intensity[ci];
        ie.matrix.assign(static_cast<std::size_t>(P) * P, PairEntry{});

        for (int a = 0; a < P; ++a) {
            SlotPair ap = protocol::pair_from_index(a, L);
            for (int b = 0; b < P; ++b) {
                SlotPair bp = protocol::pair_from_index(b, L);
                const int delay = bp.j - bp.i;
                const int gate = bp.j;
                PairEntry entry;
                for (int k = 0; k < 2; ++k) {
                    protocol::Packet pkt{ap, k, 0, 0.0};
                    auto field =
                        devices::slot_amplitudes(pkt, cls.mean_photons, devices_in.source, L);
                    for (int flip = 0; flip < 2; ++flip) {
                        double w = 0.5 * (flip ? ctx.e_mis : 1.0 - ctx.e_mis);
                        if (w == 0.0) continue;
                        auto c = slot_click_probs(ctx, field, gate, delay, flip != 0);
                        // independent after-pulse injection at the same gate;
                        // p OR q written as p + q - pq to avoid cancellation
                        double c0 = c[0] + out.afterpulse_inject[0] - c[0] * out.afterpulse_inject[0];
                        double c1 = c[1] + out.afterpulse_inject[1] - c[1] * out.afterpulse_inject[1];
                        double detect = c0 + c1 - c0 * c1;
                        double both = c0 * c1;
                        // bob's bit is the clicking channel; ties break fairly
                        double cw = k == 0 ? c1 : c0;
                        double cr = k == 0 ? c0 : c1;
                        double err = cw * (1.0 - cr) + both / 2.0;
                        entry.p_detect += w * detect;
                        entry.p_error += w * err;
                    }
                }
                ie.matrix[static_cast<std::size_t>(a) * P + b] = entry;
            }
        }

        // Q and Q' are unweighted means over configurations (each cell ratio
        // estimates its own conditional); E is a ratio of totals and carries
        // the sampling weights
        double q_sum = 0.0, qp_sum = 0.0;
        int qp_cells = 0;
        double err_w = 0.0, det_w = 0.0;
        for (int a = 0; a < P; ++a) {
            SlotPair ap = protocol::pair_from_index(a, L);
            for (int b = 0; b < P; ++b) {
                SlotPair bp = protocol::pair_from_index(b, L);
                const PairEntry& e = ie.matrix[static_cast<std::size_t>(a) * P + b];
                PairOverlap ov = protocol::classify_overlap(ap, bp);
                if (ov == PairOverlap::matched) {
                    q_sum += e.p_detect;
                    err_w += params.pair_weights[a] * setting_weight[b] * e.p_error;
                    det_w += params.pair_weights[a] * setting_weight[b] * e.p_detect;
                } else if (ov == PairOverlap::disjoint) {
                    qp_sum += e.p_detect;
                    ++qp_cells;
                }
            }
        }
        ie.Q = q_sum / P;
        ie.Q_prime = qp_cells > 0 ? qp_sum / qp_cells : 0.0;
        ie.E = det_w > 0.0 ? err_w / det_w : 0.0;
    }
    return out;
}

ExpectedCounts expected_counts(const ExpectedStatistics& stats,
                               const protocol::ProtocolParams& params, int cls,
                               std::uint64_t n_packets) {
    const int L = stats.L;
    const int P = protocol::pair_count(L);
    auto settings = protocol::setting_distribution(params);
    std::vector<double> setting_weight(static_cast<std::size_t>(P), 0.0);
    for (const auto& [ms, w] : settings)
        setting_weight[static_cast<std::size_t>(protocol::pair_index(ms.pair(), L))] += w;

    ExpectedCounts out;
    const double n = static_cast<double>(n_packets) * params.intensities[cls].probability;
    for (int a = 0; a < P; ++a) {
        SlotPair ap = protocol::pair_from_index(a, L);
        for (int b = 0; b < P; ++b) {
            SlotPair bp = protocol::pair_from_index(b, L);
            double n_cell = n * params.pair_weights[a] * setting_weight[b];
            const PairEntry& e = stats.entry(cls, a, b);
            PairOverlap ov = protocol::classify_overlap(ap, bp);
            if (ov == PairOverlap::matched) {
                out.matched_detections += n_cell * e.p_detect;
                out.matched_var += n_cell * e.p_detect * (1.0 - e.p_detect);
                out.matched_errors += n_cell * e.p_error;
                out.error_var += n_cell * e.p_error * (1.0 - e.p_error);
            } else if (ov == PairOverlap::disjoint) {
                out.disjoint_detections += n_cell * e.p_detect;
                out.disjoint_var += n_cell * e.p_detect * (1.0 - e.p_detect);
            }
        }
    }
    return out;
}

}  // namespace chausim::analytic
