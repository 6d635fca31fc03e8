#pragma once

#include <optional>
#include <string>

#include "chausim/qmath.hpp"

namespace chausim::security {

// Upper bound on the eavesdropper's information per sifted bit from the mean
// matched gain Q and the mean disjoint gain Q': h2(Q'/(2Q)), with the
// argument clipped into [0, 1/2]. The clip is conservative: at and beyond
// Q' = Q the bound saturates at one full bit. Requires Q > 0.
double iae_bound(double Q, double Q_prime);

// One-way secret key rate per sifted bit: 1 - f_ec*h2(E) - iae_bits.
double keyrate_sifted(double E, double iae_bits, double f_ec = 1.0);

// Round-robin DPS comparison rate for a single-photon train of length L:
// 1 - h2(e_bit) - h2(1/(L-1)). Requires L >= 3.
double rrdps_keyrate(double e_bit, int L);

struct IntensityPoint {
    std::string label;
    double intensity = 0.0;    // mean photons per packet
    double probability = 0.0;  // emission probability of this class
    double Q = 0.0;            // matched gain
    double Q_prime = 0.0;      // disjoint gain
    std::optional<double> E;   // error rate; usually measured for the signal only
};

struct DecoyInputs {
    IntensityPoint signal;  // mu
    IntensityPoint decoy1;  // nu1
    IntensityPoint decoy2;  // nu2

    // mu > nu1 > nu2 >= 0, nu1 + nu2 < mu, gains in [0,1]
    void validate() const;
};

// Two-decoy bounds under Poissonian photon statistics (phase-randomized
// source). Bound directions: Y0, Y1 are lower bounds, e1 and the disjoint
// yield Y1' are upper bounds.
struct DecoyEstimate {
    double Y0_lower = 0.0;
    double Y1_lower = 0.0;
    double e1_upper = 1.0;
    double Y1p_upper = 0.0;
    double Q1_lower = 0.0;  // mu e^-mu Y1_lower
};

// Throws InfeasibleStatistics when the statistics cannot come from any
// Poissonian yield model (crossing bounds); never clamps those silently.
DecoyEstimate decoy_bounds(const DecoyInputs& inputs);

// Whether the gains were measured conditioned on both parties' settings
// (conditional) or folded over Bob's random setting choice (folded). The
// conversion to a per-packet rate divides by the pair count only in the
// conditional case.
enum class SiftConvention { conditional, folded };

struct KeyRateOptions {
    double f_ec = 1.0;
    SiftConvention convention = SiftConvention::conditional;
};

struct KeyRateResult {
    double R_packet = 0.0;      // clamped at 0
    double R_packet_raw = 0.0;  // possibly negative
    double R_sifted = 0.0;      // signal-level 1 - f h2(E) - h2(Q'/2Q), clamped
    double R_sifted_raw = 0.0;
    // component breakdown
    double iae_single_photon = 0.0;  // h2 bound evaluated on Y1'/2Y1
    double iae_signal = 0.0;         // h2 bound on the aggregate signal gains
    double ec_term = 0.0;            // f_ec * Q_mu * h2(E_mu)
    double sift_factor = 1.0;
    double single_photon_gain = 0.0;      // Q1 lower
    double single_photon_fraction = 0.0;  // Q1/Q_mu
    double f_ec = 1.0;
    DecoyEstimate decoy;
};

// Per-packet one-way rate:
//   R = p_mu * sift * [ Q1_low * (1 - h2(Y1'up / 2 Y1_low)) - f * Q_mu * h2(E_mu) ]
// with the raw (possibly negative) value retained alongside the clamp.
KeyRateResult keyrate_packet(const DecoyInputs& inputs, const DecoyEstimate& estimate, int L,
                             const KeyRateOptions& options = {});

}  // namespace chausim::security
