#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chausim/rng.hpp"

namespace chausim::protocol {

// Packet length cap; the security analysis applies for any L >= 4 and the
// engine supports up to this many slots.
inline constexpr int kMaxSlots = 16;

// Ordered slot pair 1 <= i < j <= L.
struct SlotPair {
    int i = 1;
    int j = 2;

    SlotPair() = default;
    SlotPair(int i_, int j_);
    bool operator==(const SlotPair&) const = default;
};

// Number of distinct pairs for packet length L.
int pair_count(int L);
// Lexicographic rank of a pair among the pair_count(L) pairs, and back.
int pair_index(SlotPair p, int L);
SlotPair pair_from_index(int index, int L);

enum class PairOverlap { matched, disjoint, partial };

// Overlap class of two slot pairs: identical sets, no common index, or
// exactly one common index.
PairOverlap classify_overlap(SlotPair a, SlotPair b);

struct IntensityClass {
    std::string label;
    double mean_photons = 0.0;
    double probability = 0.0;

    bool operator==(const IntensityClass&) const = default;
};

// How Bob picks his projection pair: uniformly over the pair set (protocol
// definition) or by first drawing an interferometer delay (apparatus model).
enum class BobConvention { uniform_pairs, uniform_delay };

struct ProtocolParams {
    int L = 5;
    // weights over the pair_count(L) pairs in pair_index order; normalized on
    // validate(), every entry must be > 0 for the estimators to be defined
    std::vector<double> pair_weights;
    BobConvention bob_convention = BobConvention::uniform_pairs;
    // weights over delays 1..L-1; used by the uniform_delay convention
    std::vector<double> delay_weights;
    std::vector<IntensityClass> intensities;

    static ProtocolParams uniform(int L, std::vector<IntensityClass> classes);

    // throws std::invalid_argument on violated invariants; normalizes weights
    void validate_and_normalize();
    void check() const;  // validation without mutation

    int signal_index() const;  // class with the largest mean photon number
};

struct Packet {
    SlotPair pair;
    int key_bit = 0;  // 0 encodes +, 1 encodes - (relative phase 0 / pi)
    int intensity_index = 0;
    double global_phase = 0.0;  // radians in [0, 2pi)
};

struct MeasurementSetting {
    int delay = 1;      // r in 1..L-1
    int start_slot = 1; // m; the projected pair is (m, m+r)
    SlotPair pair() const { return SlotPair(start_slot, start_slot + delay); }
};

Packet prepare_packet(CounterRng& rng, const ProtocolParams& params);
MeasurementSetting bob_setting(CounterRng& rng, const ProtocolParams& params);

// Enumerates Bob's settings with their probabilities under the configured
// convention. Shared by the analytic model and the tests.
std::vector<std::pair<MeasurementSetting, double>> setting_distribution(const ProtocolParams& params);

struct SiftRecord {
    bool kept = false;
    bool error = false;  // meaningful only when kept
    PairOverlap overlap = PairOverlap::partial;
};

// Sifting rule: keep iff {i,j} = {m,n}; otherwise report the mismatch class.
SiftRecord sift(SlotPair alice, SlotPair bob, int alice_bit, int bob_bit);

struct TallyCell {
    std::uint64_t sent = 0;
    std::uint64_t detected = 0;
    std::uint64_t errors = 0;

    bool operator==(const TallyCell&) const = default;
};

struct IntensityTally {
    // pair_count x pair_count cells, index = alice_pair_index * P + bob_pair_index
    std::vector<TallyCell> cells;
    std::uint64_t sent_total = 0;
    std::uint64_t double_clicks = 0;  // both channels fired in the gated slot

    bool operator==(const IntensityTally&) const = default;
};

// Counters n(detected pair | sent pair, intensity). Workers own private
// tallies; merge() is commutative and associative.
struct SiftTally {
    int L = 0;
    std::vector<IntensityClass> classes;
    std::vector<IntensityTally> per_intensity;
    std::uint64_t total_packets = 0;

    static SiftTally empty(const ProtocolParams& params);
    int signal_index() const;  // class with the largest mean photon number

    TallyCell& cell(int cls, int alice_idx, int bob_idx);
    const TallyCell& cell(int cls, int alice_idx, int bob_idx) const;

    void merge(const SiftTally& other);  // throws on shape mismatch
    bool operator==(const SiftTally&) const = default;
};

struct EstimateWithError {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t trials = 0;
};

struct IntensityEstimates {
    std::string label;
    EstimateWithError Q;        // mean matched-setting detection probability
    EstimateWithError Q_prime;  // mean disjoint-setting detection probability
    // error rate among matched detections; absent when there were none
    // (routine for weak decoy classes in short runs)
    std::optional<EstimateWithError> E;
};

struct TallyEstimates {
    std::vector<IntensityEstimates> per_intensity;
    int signal_index = 0;

    const IntensityEstimates& signal() const { return per_intensity.at(signal_index); }
};

// Q, Q', E per intensity class with binomial standard errors. Throws
// UndefinedEstimator when a required conditional has zero trials.
TallyEstimates estimate(const SiftTally& tally);
TallyEstimates estimate(const SiftTally& tally, const ProtocolParams& params);

}  // namespace chausim::protocol
