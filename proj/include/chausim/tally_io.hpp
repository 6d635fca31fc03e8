#pragma once

#include <optional>
#include <string>

#include "chausim/analytic.hpp"
#include "chausim/montecarlo.hpp"
#include "chausim/protocol.hpp"
#include "chausim/security.hpp"

namespace chausim::io {

// Tally files ("chausim-tally/1"): counters keyed by intensity label and the
// (sent pair, detected pair) grid, plus provenance and, when defined, the
// derived estimates. Serialization is canonical: fixed key order, cells in
// alice-major order, zero-sent cells omitted. Identical tallies produce
// byte-identical files.
std::string tally_to_json(const protocol::SiftTally& tally,
                          const std::optional<protocol::TallyEstimates>& estimates,
                          const mc::Provenance& provenance);

struct ParsedTally {
    protocol::SiftTally tally;
    mc::Provenance provenance;
};

ParsedTally tally_from_json(const std::string& text);

// Measured-statistics files ("chausim-decoy/1"): per-intensity Q, Q', E plus
// key-rate options. The signal is the largest intensity.
struct DecoyFile {
    int L = 5;
    security::DecoyInputs inputs;
    security::KeyRateOptions options;
};

DecoyFile decoy_from_json(const std::string& text);
std::string decoy_to_json(const DecoyFile& file);

// Key-rate reports as structured text and as a CSV row.
std::string keyrate_to_json(const security::KeyRateResult& result,
                            const security::DecoyInputs& inputs, int L);
std::string keyrate_csv_header();
std::string keyrate_csv_row(const std::string& source_name,
                            const security::KeyRateResult& result,
                            const security::DecoyInputs& inputs, int L);

// Expected statistics as structured text, diffable against tallies.
std::string expected_stats_to_json(const analytic::ExpectedStatistics& stats);

// Whether a JSON document is a tally or a decoy file (by its "format" field).
enum class FileKind { tally, decoy, unknown };
FileKind sniff_kind(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace chausim::io
