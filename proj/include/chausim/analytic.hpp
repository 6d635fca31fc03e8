#pragma once

#include <string>
#include <vector>

#include "chausim/devices.hpp"
#include "chausim/protocol.hpp"

namespace chausim::analytic {

// Joint probabilities per (sent pair, setting pair): detection, and
// detection-with-wrong-bit, conditioned on both parties' settings.
struct PairEntry {
    double p_detect = 0.0;
    double p_error = 0.0;
};

struct IntensityExpectation {
    std::string label;
    double mean_photons = 0.0;
    std::vector<PairEntry> matrix;  // pair_count^2, alice-major
    double Q = 0.0;
    double Q_prime = 0.0;
    double E = 0.0;  // weighted by the configured pair/setting distributions
    // expected intrinsic clicks per packet and channel, before after-pulse
    // injection; drives the after-pulse rate
    std::array<double, 2> expected_clicks{};
};

struct ExpectedStatistics {
    int L = 0;
    std::vector<IntensityExpectation> per_intensity;
    // probability that an after-pulse click lands in a given gate, per channel
    std::array<double, 2> afterpulse_inject{};
    int signal_index = 0;

    const IntensityExpectation& signal() const { return per_intensity.at(signal_index); }
    const PairEntry& entry(int cls, int alice_idx, int bob_idx) const;
};

// Closed-form expectations for the same per-packet model the Monte Carlo
// engine samples: coherent two-pulse interference at the matched slot,
// incoherent leakage elsewhere, finite interferometer extinction as port
// crosstalk, misalignment as a phase-flip branch, dark counts per gate, and
// after-pulses as an additive per-gate rate seeded by intrinsic clicks.
ExpectedStatistics expected_stats(const protocol::ProtocolParams& params,
                                  const devices::DeviceChain& devices);

// Expected counts for a run of n_packets, for z-scoring a Monte Carlo tally
// against the model. Variances are exact binomial sums over configurations.
struct ExpectedCounts {
    double matched_detections = 0.0;
    double matched_var = 0.0;
    double matched_errors = 0.0;
    double error_var = 0.0;
    double disjoint_detections = 0.0;
    double disjoint_var = 0.0;
};

ExpectedCounts expected_counts(const ExpectedStatistics& stats,
                               const protocol::ProtocolParams& params, int cls,
                               std::uint64_t n_packets);

}  // namespace chausim::analytic
