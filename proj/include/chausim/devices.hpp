#pragma once

#include <array>

#include "chausim/protocol.hpp"
#include "chausim/qmath.hpp"
#include "chausim/rng.hpp"

namespace chausim::devices {

struct SourceModel {
    double pulse_period_ns = 1.0;
    // mean-photon leakage of a suppressed slot relative to an intended pulse
    // slot (finite intensity-modulator extinction)
    double im_extinction = 1.0 / 280.0;
    enum class PhotonNumber { poisson, single } photon_number = PhotonNumber::poisson;

    void validate() const;
};

struct ChannelModel {
    double length_km = 0.0;
    double attenuation_db_per_km = 0.2;
    // probability that interfering light lands on the wrong output port
    // (modeled as a relative phase flip)
    double misalignment = 0.0;

    void validate() const;
};

struct InterferometerModel {
    bool present = true;
    double insertion_loss_db = 2.0;
    double extinction_ratio_db = 23.0;

    // fraction of each output port mixed into the other so that an ideally
    // dark port floors at 10^(-ER/10) of the bright one
    double crosstalk() const;
    void validate() const;
};

struct DetectorModel {
    double efficiency = 0.204;
    double dark_per_gate = 2.6e-6;  // total over the two channels
    std::array<double, 2> afterpulse = {0.008, 0.011};

    double dark_channel(int ch) const {
        (void)ch;
        return dark_per_gate / 2.0;
    }
    bool afterpulse_enabled() const { return afterpulse[0] > 0.0 || afterpulse[1] > 0.0; }
    void validate() const;
};

struct DeviceChain {
    SourceModel source;
    ChannelModel channel;
    InterferometerModel interferometer;
    DetectorModel detector;

    // fiber x interferometer insertion loss x detector efficiency, composed
    // into one factor applied to coherent-state intensities
    double eta_total() const;
    void validate() const;
};

// 10^(-(length*attenuation + extra_loss_db)/10)
qmath::Probability transmittance(const ChannelModel& channel, double extra_loss_db);

// Mean photon number per slot at the source output, 1-based in [1..L].
struct SlotField {
    int L = 0;
    std::array<double, protocol::kMaxSlots + 1> intensity{};
    protocol::SlotPair pulses;
    double rel_phase = 0.0;     // phase of slot j relative to slot i: 0 or pi
    double global_phase = 0.0;

    int phase_parity() const { return rel_phase > 1.0 ? 1 : 0; }
};

// Splits the class intensity equally over the packet's two pulse slots and
// puts im_extinction * (mu/2) into every suppressed slot (phase unspecified).
SlotField slot_amplitudes(const protocol::Packet& packet, double mean_photons,
                          const SourceModel& source, int L);

// Mean intensities at the interferometer's two output ports for output slot
// `out_slot` with the delay line set to `delay`. The short arm contributes
// the input slot at the same position, the long arm the slot `delay` earlier.
// Only the packet's own pulse pair combines coherently (their relative phase
// is defined); any combination involving leakage light adds incoherently.
// `phase_flipped` applies the misalignment phase error to the coherent term.
std::array<double, 2> output_port_intensities(const SlotField& field, int out_slot, int delay,
                                              bool phase_flipped, const InterferometerModel& ifm);

// Threshold detector: 1 - (1-dark) * exp(-efficiency * mean_photons).
double click_probability(double mean_photons_at_detector, double efficiency, double dark);

// One sample per output channel given per-channel mean photon numbers already
// scaled to the detector input. After-pulse seeding is handled by the engine.
std::array<bool, 2> detect_slot(const std::array<double, 2>& mean_photons_at_detector,
                                const DetectorModel& det, CounterRng& rng);

}  // namespace chausim::devices
