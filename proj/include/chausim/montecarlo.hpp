#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "chausim/devices.hpp"
#include "chausim/eve.hpp"
#include "chausim/protocol.hpp"

namespace chausim::mc {

struct NoAttack {};
struct InterceptResend {};
using AttackSpec = std::variant<NoAttack, InterceptResend, eve::CollectiveAttack>;

struct RunConfig {
    std::uint64_t n_packets = 0;
    std::uint64_t seed = 0;
    int workers = 1;  // 0 = all hardware threads
    protocol::ProtocolParams params;
    devices::DeviceChain devices;
    AttackSpec attack = NoAttack{};
    std::string config_hash;  // carried through to provenance

    void validate() const;
};

struct Provenance {
    std::string engine;
    std::uint64_t seed = 0;
    int workers = 0;
    std::uint64_t n_packets = 0;
    std::string config_hash;
};

struct RunResult {
    protocol::SiftTally tally;
    // present when every requested conditional had trials
    std::optional<protocol::TallyEstimates> estimates;
    Provenance provenance;
};

// Deterministic for fixed (config, seed): every packet owns counter-based
// streams keyed by its global index, so the merged tally is identical for any
// worker count and any schedule. A failing worker aborts the run and the
// partial tallies are discarded.
RunResult run(const RunConfig& config);

// Serial reference implementation (also the workers==1 path of run()).
protocol::SiftTally run_serial(const RunConfig& config);
// OpenMP path; workers <= 0 means all hardware threads.
protocol::SiftTally run_parallel(const RunConfig& config, int workers);

}  // namespace chausim::mc
