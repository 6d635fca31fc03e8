#include "chausim/protocol.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "chausim/errors.hpp"
#include "chausim/qmath.hpp"

namespace chausim::protocol {

SlotPair::SlotPair(int i_, int j_) : i(i_), j(j_) {
    if (i < 1 || i >= j) throw std::invalid_argument("slot pair requires 1 <= i < j");
}

int pair_count(int L) { return L * (L - 1) / 2; }

int pair_index(SlotPair p, int L) {
    if (p.j > L) throw std::invalid_argument("slot pair exceeds packet length");
    // pairs ordered (1,2),(1,3),...,(1,L),(2,3),...
    int before = (p.i - 1) * L - (p.i - 1) * p.i / 2;
    return before + (p.j - p.i - 1);
}

SlotPair pair_from_index(int index, int L) {
    if (index < 0 || index >= pair_count(L)) throw std::invalid_argument("pair index out of range");
    int i = 1;
    while (index >= L - i) {
        index -= L - i;
        ++i;
    }
    return SlotPair(i, i + 1 + index);
}

PairOverlap classify_overlap(SlotPair a, SlotPair b) {
    int common = (a.i == b.i) + (a.i == b.j) + (a.j == b.i) + (a.j == b.j);
    if (common == 2) return PairOverlap::matched;
    if (common == 0) return PairOverlap::disjoint;
    return PairOverlap::partial;
}

ProtocolParams ProtocolParams::uniform(int L, std::vector<IntensityClass> classes) {
    ProtocolParams p;
    p.L = L;
    p.pair_weights.assign(pair_count(L), 1.0);
    p.delay_weights.assign(L - 1, 1.0);
    p.intensities = std::move(classes);
    p.validate_and_normalize();
    return p;
}

namespace {

void normalize(std::vector<double>& w, const char* what) {
    double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(sum > 0.0)) throw std::invalid_argument(std::string(what) + ": weights must sum > 0");
    for (double& x : w) x /= sum;
}

}  // namespace

void ProtocolParams::validate_and_normalize() {
    if (L < 4) throw std::invalid_argument("packet length L must be >= 4");
    if (L > kMaxSlots) throw std::invalid_argument("packet length L exceeds engine cap");
    if (static_cast<int>(pair_weights.size()) != pair_count(L))
        throw std::invalid_argument("pair_weights size must be binom(L,2)");
    for (double w : pair_weights)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("pair weights must be finite and >= 0");
    normalize(pair_weights, "pair_weights");
    if (static_cast<int>(delay_weights.size()) != L - 1)
        throw std::invalid_argument("delay_weights size must be L-1");
    for (double w : delay_weights)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("delay weights must be finite and >= 0");
    normalize(delay_weights, "delay_weights");
    if (intensities.empty()) throw std::invalid_argument("at least one intensity class required");
    double psum = 0.0;
    for (const auto& c : intensities) {
        if (c.label.empty()) throw std::invalid_argument("intensity class needs a label");
        if (!(c.mean_photons >= 0.0)) throw std::invalid_argument("mean photons must be >= 0");
        if (!(c.probability >= 0.0)) throw std::invalid_argument("class probability must be >= 0");
        psum += c.probability;
    }
    if (!(psum > 0.0)) throw std::invalid_argument("class probabilities must sum > 0");
    for (auto& c : intensities) c.probability /= psum;
}

void ProtocolParams::check() const {
    ProtocolParams copy = *this;
    copy.validate_and_normalize();
    double sum = std::accumulate(pair_weights.begin(), pair_weights.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("pair weights not normalized");
}

int ProtocolParams::signal_index() const {
    int best = 0;
    for (std::size_t i = 1; i < intensities.size(); ++i)
        if (intensities[i].mean_photons > intensities[best].mean_photons)
            best = static_cast<int>(i);
    return best;
}

Packet prepare_packet(CounterRng& rng, const ProtocolParams& params) {
    Packet pkt;
    pkt.intensity_index = 0;
    if (params.intensities.size() > 1) {
        std::vector<double> w(params.intensities.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = params.intensities[i].probability;
        pkt.intensity_index = static_cast<int>(rng.categorical(w.data(), w.size()));
    }
    int idx = static_cast<int>(rng.categorical(params.pair_weights.data(), params.pair_weights.size()));
    pkt.pair = pair_from_index(idx, params.L);
    pkt.key_bit = static_cast<int>(rng.next_u64() & 1u);
    pkt.global_phase = rng.next_unit() * 2.0 * std::numbers::pi;
    return pkt;
}

MeasurementSetting bob_setting(CounterRng& rng, const ProtocolParams& params) {
    MeasurementSetting ms;
    if (params.bob_convention == BobConvention::uniform_pairs) {
        // protocol text: a pair, uniformly (or as weighted); delay derived
        int idx = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(pair_count(params.L))));
        SlotPair p = pair_from_index(idx, params.L);
        ms.start_slot = p.i;
        ms.delay = p.j - p.i;
    } else {
        int r = 1 + static_cast<int>(rng.categorical(params.delay_weights.data(), params.delay_weights.size()));
        ms.delay = r;
        ms.start_slot = 1 + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(params.L - r)));
    }
    return ms;
}

std::vector<std::pair<MeasurementSetting, double>> setting_distribution(const ProtocolParams& params) {
    std::vector<std::pair<MeasurementSetting, double>> out;
    const int P = pair_count(params.L);
    if (params.bob_convention == BobConvention::uniform_pairs) {
        for (int b = 0; b < P; ++b) {
            SlotPair p = pair_from_index(b, params.L);
            out.push_back({MeasurementSetting{p.j - p.i, p.i}, 1.0 / P});
        }
    } else {
        for (int r = 1; r <= params.L - 1; ++r) {
            double pr = params.delay_weights[r - 1];
            int placements = params.L - r;
            for (int m = 1; m <= placements; ++m)
                out.push_back({MeasurementSetting{r, m}, pr / placements});
        }
    }
    return out;
}

SiftRecord sift(SlotPair alice, SlotPair bob, int alice_bit, int bob_bit) {
    SiftRecord rec;
    rec.overlap = classify_overlap(alice, bob);
    if (rec.overlap == PairOverlap::matched) {
        rec.kept = true;
        rec.error = alice_bit != bob_bit;
    }
    return rec;
}

SiftTally SiftTally::empty(const ProtocolParams& params) {
    SiftTally t;
    t.L = params.L;
    const std::size_t P = static_cast<std::size_t>(pair_count(params.L));
    for (const auto& c : params.intensities) {
        t.classes.push_back(c);
        IntensityTally it;
        it.cells.assign(P * P, TallyCell{});
        t.per_intensity.push_back(std::move(it));
    }
    return t;
}

int SiftTally::signal_index() const {
    int best = 0;
    for (std::size_t i = 1; i < classes.size(); ++i)
        if (classes[i].mean_photons > classes[best].mean_photons) best = static_cast<int>(i);
    return best;
}

TallyCell& SiftTally::cell(int cls, int alice_idx, int bob_idx) {
    const int P = pair_count(L);
    return per_intensity[cls].cells[static_cast<std::size_t>(alice_idx) * P + bob_idx];
}

const TallyCell& SiftTally::cell(int cls, int alice_idx, int bob_idx) const {
    const int P = pair_count(L);
    return per_intensity[cls].cells[static_cast<std::size_t>(alice_idx) * P + bob_idx];
}

void SiftTally::merge(const SiftTally& other) {
    if (L != other.L || classes != other.classes ||
        per_intensity.size() != other.per_intensity.size())
        throw std::invalid_argument("tally merge: shape mismatch");
    for (std::size_t c = 0; c < per_intensity.size(); ++c) {
        auto& mine = per_intensity[c];
        const auto& theirs = other.per_intensity[c];
        if (mine.cells.size() != theirs.cells.size())
            throw std::invalid_argument("tally merge: cell count mismatch");
        for (std::size_t k = 0; k < mine.cells.size(); ++k) {
            mine.cells[k].sent += theirs.cells[k].sent;
            mine.cells[k].detected += theirs.cells[k].detected;
            mine.cells[k].errors += theirs.cells[k].errors;
        }
        mine.sent_total += theirs.sent_total;
        mine.double_clicks += theirs.double_clicks;
    }
    total_packets += other.total_packets;
}

TallyEstimates estimate(const SiftTally& tally, const ProtocolParams& params) {
    if (tally.L != params.L || tally.classes.size() != params.intensities.size())
        throw std::invalid_argument("tally does not match the protocol parameters");
    return estimate(tally);
}

TallyEstimates estimate(const SiftTally& tally) {
    TallyEstimates est;
    est.signal_index = tally.signal_index();
    const int P = pair_count(tally.L);
    for (std::size_t c = 0; c < tally.per_intensity.size(); ++c) {
        IntensityEstimates ie;
        ie.label = tally.classes[c].label;

        double q_sum = 0.0, q_var = 0.0;
        std::uint64_t q_trials = 0, det_total = 0, err_total = 0;
        int matched_cells = 0;
        double qp_sum = 0.0, qp_var = 0.0;
        std::uint64_t qp_trials = 0;
        int disjoint_cells = 0;

        for (int a = 0; a < P; ++a) {
            SlotPair ap = pair_from_index(a, tally.L);
            for (int b = 0; b < P; ++b) {
                SlotPair bp = pair_from_index(b, tally.L);
                const TallyCell& cell = tally.cell(static_cast<int>(c), a, b);
                PairOverlap ov = classify_overlap(ap, bp);
                if (ov == PairOverlap::matched) {
                    if (cell.sent == 0)
                        throw UndefinedEstimator("Q undefined: no trials for pair (" +
                                                 std::to_string(ap.i) + "," + std::to_string(ap.j) +
                                                 ") in class " + ie.label);
                    double p = static_cast<double>(cell.detected) / static_cast<double>(cell.sent);
                    q_sum += p;
                    q_var += p * (1.0 - p) / static_cast<double>(cell.sent);
                    q_trials += cell.sent;
                    det_total += cell.detected;
                    err_total += cell.errors;
                    ++matched_cells;
                } else if (ov == PairOverlap::disjoint) {
                    if (cell.sent == 0)
                        throw UndefinedEstimator("Q' undefined: no trials for configuration (" +
                                                 std::to_string(ap.i) + "," + std::to_string(ap.j) +
                                                 ")->(" + std::to_string(bp.i) + "," +
                                                 std::to_string(bp.j) + ") in class " + ie.label);
                    double p = static_cast<double>(cell.detected) / static_cast<double>(cell.sent);
                    qp_sum += p;
                    qp_var += p * (1.0 - p) / static_cast<double>(cell.sent);
                    qp_trials += cell.sent;
                    ++disjoint_cells;
                }
            }
        }

        ie.Q.value = q_sum / matched_cells;
        ie.Q.std_error = std::sqrt(q_var) / matched_cells;
        ie.Q.trials = q_trials;
        ie.Q_prime.value = disjoint_cells > 0 ? qp_sum / disjoint_cells : 0.0;
        ie.Q_prime.std_error = disjoint_cells > 0 ? std::sqrt(qp_var) / disjoint_cells : 0.0;
        ie.Q_prime.trials = qp_trials;
        if (det_total > 0) {
            double e = static_cast<double>(err_total) / static_cast<double>(det_total);
            ie.E = EstimateWithError{
                e, std::sqrt(e * (1.0 - e) / static_cast<double>(det_total)), det_total};
        }

        est.per_intensity.push_back(std::move(ie));
    }
    return est;
}

}  // namespace chausim::protocol
