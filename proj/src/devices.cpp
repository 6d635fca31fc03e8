#include "chausim/devices.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace chausim::devices {

void SourceModel::validate() const {
    if (!(pulse_period_ns > 0.0)) throw std::invalid_argument("pulse period must be > 0");
    if (!(im_extinction >= 0.0 && im_extinction < 1.0))
        throw std::invalid_argument("im_extinction must be in [0,1)");
}

void ChannelModel::validate() const {
    if (!(length_km >= 0.0)) throw std::invalid_argument("fiber length must be >= 0");
    if (!(attenuation_db_per_km > 0.0)) throw std::invalid_argument("attenuation must be > 0");
    if (!(misalignment >= 0.0 && misalignment <= 1.0))
        throw std::invalid_argument("misalignment must be in [0,1]");
}

double InterferometerModel::crosstalk() const {
    // ratios at or beyond 250 dB are a perfect dark port
    if (!present || extinction_ratio_db >= 250.0) return 0.0;
    double k = std::pow(10.0, -extinction_ratio_db / 10.0);
    return k / (1.0 + k);
}

void InterferometerModel::validate() const {
    if (!(insertion_loss_db >= 0.0)) throw std::invalid_argument("insertion loss must be >= 0");
    if (!(extinction_ratio_db > 0.0)) throw std::invalid_argument("extinction ratio must be > 0");
}

void DetectorModel::validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0))
        throw std::invalid_argument("detector efficiency must be in [0,1]");
    if (!(dark_per_gate >= 0.0 && dark_per_gate <= 1.0))
        throw std::invalid_argument("dark count per gate must be in [0,1]");
    for (double ap : afterpulse)
        if (!(ap >= 0.0 && ap <= 1.0))
            throw std::invalid_argument("afterpulse probability must be in [0,1]");
}

double DeviceChain::eta_total() const {
    double il = interferometer.present ? interferometer.insertion_loss_db : 0.0;
    return transmittance(channel, il).value() * detector.efficiency;
}

void DeviceChain::validate() const {
    source.validate();
    channel.validate();
    interferometer.validate();
    detector.validate();
}

qmath::Probability transmittance(const ChannelModel& channel, double extra_loss_db) {
    if (!(extra_loss_db >= 0.0) || !std::isfinite(extra_loss_db))
        throw std::invalid_argument("extra loss must be finite and >= 0");
    channel.validate();
    double loss_db = channel.length_km * channel.attenuation_db_per_km + extra_loss_db;
    return qmath::Probability(std::pow(10.0, -loss_db / 10.0));
}

SlotField slot_amplitudes(const protocol::Packet& packet, double mean_photons,
                          const SourceModel& source, int L) {
    if (packet.pair.j > L) throw std::invalid_argument("packet pair exceeds packet length");
    SlotField f;
    f.L = L;
    f.pulses = packet.pair;
    f.rel_phase = packet.key_bit ? std::numbers::pi : 0.0;
    f.global_phase = packet.global_phase;
    const double pulse = mean_photons / 2.0;
    const double leak = source.im_extinction * pulse;
    for (int s = 1; s <= L; ++s) f.intensity[s] = leak;
    f.intensity[packet.pair.i] = pulse;
    f.intensity[packet.pair.j] = pulse;
    return f;
}

std::array<double, 2> output_port_intensities(const SlotField& field, int out_slot, int delay,
                                              bool phase_flipped, const InterferometerModel& ifm) {
    const double i_short = (out_slot >= 1 && out_slot <= field.L) ? field.intensity[out_slot] : 0.0;
    const int from = out_slot - delay;
    const double i_long = (from >= 1 && from <= field.L) ? field.intensity[from] : 0.0;

    double p0, p1;
    const bool coherent = (from == field.pulses.i && out_slot == field.pulses.j);
    if (coherent) {
        const int parity = field.phase_parity() ^ (phase_flipped ? 1 : 0);
        const double cross = 2.0 * std::sqrt(i_short * i_long) * (parity ? -1.0 : 1.0);
        p0 = (i_short + i_long + cross) / 4.0;
        p1 = (i_short + i_long - cross) / 4.0;
    } else {
        p0 = p1 = (i_short + i_long) / 4.0;
    }
    const double xi = ifm.crosstalk();
    return {(1.0 - xi) * p0 + xi * p1, (1.0 - xi) * p1 + xi * p0};
}

double click_probability(double mean_photons_at_detector, double efficiency, double dark) {
    if (!(mean_photons_at_detector >= 0.0))
        throw std::invalid_argument("mean photon number must be >= 0");
    // 1 - (1-dark) exp(-eta mu), in a form stable down to dark-count scale
    const double optical = -std::expm1(-efficiency * mean_photons_at_detector);
    return dark + (1.0 - dark) * optical;
}

std::array<bool, 2> detect_slot(const std::array<double, 2>& mean_photons_at_detector,
                                const DetectorModel& det, CounterRng& rng) {
    std::array<bool, 2> clicks{};
    for (int ch = 0; ch < 2; ++ch) {
        double p = click_probability(mean_photons_at_detector[ch], det.efficiency,
                                     det.dark_channel(ch));
        clicks[ch] = rng.bernoulli(p);
    }
    return clicks;
}

}  // namespace chausim::devices
