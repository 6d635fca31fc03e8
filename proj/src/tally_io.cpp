#include "chausim/tally_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "chausim/errors.hpp"

namespace chausim::io {

using nlohmann::ordered_json;
using protocol::SlotPair;

namespace {

ordered_json estimate_json(const protocol::EstimateWithError& e) {
    return ordered_json{{"value", e.value}, {"std_error", e.std_error}, {"trials", e.trials}};
}

ordered_json parse(const std::string& text, const char* what) {
    try {
        return ordered_json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

template <typename T>
T field(const ordered_json& j, const char* key, const char* where) {
    if (!j.contains(key))
        throw ConfigError(std::string(where) + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(where) + ": field '" + key + "': " + e.what());
    }
}

}  // namespace

std::string tally_to_json(const protocol::SiftTally& tally,
                          const std::optional<protocol::TallyEstimates>& estimates,
                          const mc::Provenance& prov) {
    ordered_json j;
    j["format"] = "chausim-tally/1";
    j["L"] = tally.L;
    j["total_packets"] = tally.total_packets;
    j["provenance"] = {{"engine", prov.engine},
                       {"seed", prov.seed},
                       {"workers", prov.workers},
                       {"n_packets", prov.n_packets},
                       {"config_hash", prov.config_hash}};
    const int P = protocol::pair_count(tally.L);
    ordered_json classes = ordered_json::array();
    for (std::size_t c = 0; c < tally.per_intensity.size(); ++c) {
        const auto& it = tally.per_intensity[c];
        ordered_json jc;
        jc["label"] = tally.classes[c].label;
        jc["mean_photons"] = tally.classes[c].mean_photons;
        jc["probability"] = tally.classes[c].probability;
        jc["sent_total"] = it.sent_total;
        jc["double_clicks"] = it.double_clicks;
        ordered_json cells = ordered_json::array();
        for (int a = 0; a < P; ++a) {
            SlotPair ap = protocol::pair_from_index(a, tally.L);
            for (int b = 0; b < P; ++b) {
                const auto& cell = tally.cell(static_cast<int>(c), a, b);
                if (cell.sent == 0) continue;
                SlotPair bp = protocol::pair_from_index(b, tally.L);
                cells.push_back({{"alice", {ap.i, ap.j}},
                                 {"bob", {bp.i, bp.j}},
                                 {"sent", cell.sent},
                                 {"detected", cell.detected},
                                 {"errors", cell.errors}});
            }
        }
        jc["cells"] = std::move(cells);
        classes.push_back(std::move(jc));
    }
    j["intensities"] = std::move(classes);
    if (estimates) {
        ordered_json je = ordered_json::array();
        for (const auto& ie : estimates->per_intensity) {
            ordered_json row{{"label", ie.label},
                             {"Q", estimate_json(ie.Q)},
                             {"Q_prime", estimate_json(ie.Q_prime)}};
            if (ie.E) row["E"] = estimate_json(*ie.E);
            je.push_back(std::move(row));
        }
        j["estimates"] = std::move(je);
    }
    return j.dump(2) + "\n";
}

ParsedTally tally_from_json(const std::string& text) {
    ordered_json j = parse(text, "tally file");
    if (field<std::string>(j, "format", "tally file") != "chausim-tally/1")
        throw ConfigError("tally file: unsupported format");
    ParsedTally out;
    out.tally.L = field<int>(j, "L", "tally file");
    out.tally.total_packets = field<std::uint64_t>(j, "total_packets", "tally file");
    const int P = protocol::pair_count(out.tally.L);
    if (j.contains("provenance")) {
        const auto& p = j["provenance"];
        out.provenance.engine = p.value("engine", "");
        out.provenance.seed = p.value("seed", 0ull);
        out.provenance.workers = p.value("workers", 0);
        out.provenance.n_packets = p.value("n_packets", 0ull);
        out.provenance.config_hash = p.value("config_hash", "");
    }
    for (const auto& jc : field<ordered_json>(j, "intensities", "tally file")) {
        out.tally.classes.push_back({field<std::string>(jc, "label", "tally intensity"),
                                     field<double>(jc, "mean_photons", "tally intensity"),
                                     field<double>(jc, "probability", "tally intensity")});
        protocol::IntensityTally it;
        it.cells.assign(static_cast<std::size_t>(P) * P, protocol::TallyCell{});
        it.sent_total = field<std::uint64_t>(jc, "sent_total", "tally intensity");
        it.double_clicks = field<std::uint64_t>(jc, "double_clicks", "tally intensity");
        for (const auto& cell : field<ordered_json>(jc, "cells", "tally intensity")) {
            auto av = field<std::vector<int>>(cell, "alice", "tally cell");
            auto bv = field<std::vector<int>>(cell, "bob", "tally cell");
            if (av.size() != 2 || bv.size() != 2) throw ConfigError("tally cell: bad pair");
            int a = protocol::pair_index(SlotPair(av[0], av[1]), out.tally.L);
            int b = protocol::pair_index(SlotPair(bv[0], bv[1]), out.tally.L);
            auto& tc = it.cells[static_cast<std::size_t>(a) * P + b];
            tc.sent = field<std::uint64_t>(cell, "sent", "tally cell");
            tc.detected = field<std::uint64_t>(cell, "detected", "tally cell");
            tc.errors = field<std::uint64_t>(cell, "errors", "tally cell");
            if (tc.errors > tc.detected || tc.detected > tc.sent)
                throw ConfigError("tally cell: counter ordering violated");
        }
        out.tally.per_intensity.push_back(std::move(it));
    }
    if (out.tally.per_intensity.empty()) throw ConfigError("tally file: no intensities");
    return out;
}

DecoyFile decoy_from_json(const std::string& text) {
    ordered_json j = parse(text, "decoy file");
    if (field<std::string>(j, "format", "decoy file") != "chausim-decoy/1")
        throw ConfigError("decoy file: unsupported format");
    DecoyFile out;
    out.L = field<int>(j, "L", "decoy file");
    if (j.contains("keyrate")) {
        const auto& k = j["keyrate"];
        out.options.f_ec = k.value("f_ec", 1.0);
        std::string conv = k.value("sift_convention", "conditional");
        if (conv == "conditional") out.options.convention = security::SiftConvention::conditional;
        else if (conv == "folded") out.options.convention = security::SiftConvention::folded;
        else throw ConfigError("decoy file: unknown sift_convention '" + conv + "'");
    }
    std::vector<security::IntensityPoint> pts;
    for (const auto& ji : field<ordered_json>(j, "intensities", "decoy file")) {
        security::IntensityPoint p;
        p.label = field<std::string>(ji, "label", "decoy intensity");
        p.intensity = field<double>(ji, "mean_photons", "decoy intensity");
        p.probability = field<double>(ji, "probability", "decoy intensity");
        p.Q = field<double>(ji, "Q", "decoy intensity");
        p.Q_prime = field<double>(ji, "Q_prime", "decoy intensity");
        if (ji.contains("E")) p.E = ji["E"].get<double>();
        pts.push_back(std::move(p));
    }
    if (pts.size() != 3) throw ConfigError("decoy file: exactly three intensities required");
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.intensity > b.intensity; });
    out.inputs.signal = pts[0];
    out.inputs.decoy1 = pts[1];
    out.inputs.decoy2 = pts[2];
    out.inputs.validate();
    return out;
}

std::string decoy_to_json(const DecoyFile& file) {
    ordered_json j;
    j["format"] = "chausim-decoy/1";
    j["L"] = file.L;
    j["keyrate"] = {
        {"f_ec", file.options.f_ec},
        {"sift_convention",
         file.options.convention == security::SiftConvention::conditional ? "conditional"
                                                                          : "folded"}};
    ordered_json arr = ordered_json::array();
    for (const auto* p : {&file.inputs.signal, &file.inputs.decoy1, &file.inputs.decoy2}) {
        ordered_json ji{{"label", p->label},
                        {"mean_photons", p->intensity},
                        {"probability", p->probability},
                        {"Q", p->Q},
                        {"Q_prime", p->Q_prime}};
        if (p->E) ji["E"] = *p->E;
        arr.push_back(std::move(ji));
    }
    j["intensities"] = std::move(arr);
    return j.dump(2) + "\n";
}

std::string keyrate_to_json(const security::KeyRateResult& r, const security::DecoyInputs& in,
                            int L) {
    ordered_json j;
    j["L"] = L;
    j["inputs"] = {{"mu", in.signal.intensity},
                   {"nu1", in.decoy1.intensity},
                   {"nu2", in.decoy2.intensity},
                   {"p_mu", in.signal.probability},
                   {"Q_mu", in.signal.Q},
                   {"Q_prime_mu", in.signal.Q_prime},
                   {"E_mu", in.signal.E ? *in.signal.E : -1.0}};
    j["decoy"] = {{"Y0_lower", r.decoy.Y0_lower},
                  {"Y1_lower", r.decoy.Y1_lower},
                  {"Y1p_upper", r.decoy.Y1p_upper},
                  {"e1_upper", r.decoy.e1_upper},
                  {"Q1_lower", r.decoy.Q1_lower}};
    j["components"] = {{"iae_single_photon", r.iae_single_photon},
                       {"iae_signal", r.iae_signal},
                       {"ec_term", r.ec_term},
                       {"sift_factor", r.sift_factor},
                       {"single_photon_fraction", r.single_photon_fraction},
                       {"f_ec", r.f_ec}};
    j["R_packet"] = r.R_packet;
    j["R_packet_raw"] = r.R_packet_raw;
    j["R_sifted"] = r.R_sifted;
    j["R_sifted_raw"] = r.R_sifted_raw;
    return j.dump(2) + "\n";
}

std::string keyrate_csv_header() {
    return "source,L,f_ec,sift_convention,mu,nu1,nu2,p_mu,Q_mu,Q_prime_mu,E_mu,"
           "Y0_lower,Y1_lower,Y1p_upper,e1_upper,Q1_lower,iae_single_photon,ec_term,"
           "sift_factor,R_packet_raw,R_packet,R_sifted\n";
}

std::string keyrate_csv_row(const std::string& source, const security::KeyRateResult& r,
                            const security::DecoyInputs& in, int L) {
    std::ostringstream os;
    os.precision(12);
    os << source << ',' << L << ',' << r.f_ec << ','
       << (r.sift_factor == 1.0 ? "folded" : "conditional") << ',' << in.signal.intensity << ','
       << in.decoy1.intensity << ',' << in.decoy2.intensity << ',' << in.signal.probability << ','
       << in.signal.Q << ',' << in.signal.Q_prime << ',' << (in.signal.E ? *in.signal.E : -1.0)
       << ',' << r.decoy.Y0_lower << ',' << r.decoy.Y1_lower << ',' << r.decoy.Y1p_upper << ','
       << r.decoy.e1_upper << ',' << r.decoy.Q1_lower << ',' << r.iae_single_photon << ','
       << r.ec_term << ',' << r.sift_factor << ',' << r.R_packet_raw << ',' << r.R_packet << ','
       << r.R_sifted << '\n';
    return os.str();
}

std::string expected_stats_to_json(const analytic::ExpectedStatistics& stats) {
    ordered_json j;
    j["format"] = "chausim-expected/1";
    j["L"] = stats.L;
    j["afterpulse_inject"] = {stats.afterpulse_inject[0], stats.afterpulse_inject[1]};
    ordered_json arr = ordered_json::array();
    const int P = protocol::pair_count(stats.L);
    for (const auto& ie : stats.per_intensity) {
        ordered_json ji;
        ji["label"] = ie.label;
        ji["mean_photons"] = ie.mean_photons;
        ji["Q"] = ie.Q;
        ji["Q_prime"] = ie.Q_prime;
        ji["E"] = ie.E;
        ji["expected_clicks"] = {ie.expected_clicks[0], ie.expected_clicks[1]};
        ordered_json cells = ordered_json::array();
        for (int a = 0; a < P; ++a) {
            SlotPair ap = protocol::pair_from_index(a, stats.L);
            for (int b = 0; b < P; ++b) {
                SlotPair bp = protocol::pair_from_index(b, stats.L);
                const auto& e = ie.matrix[static_cast<std::size_t>(a) * P + b];
                cells.push_back({{"alice", {ap.i, ap.j}},
                                 {"bob", {bp.i, bp.j}},
                                 {"p_detect", e.p_detect},
                                 {"p_error", e.p_error}});
            }
        }
        ji["cells"] = std::move(cells);
        arr.push_back(std::move(ji));
    }
    j["intensities"] = std::move(arr);
    return j.dump(2) + "\n";
}

FileKind sniff_kind(const std::string& text) {
    ordered_json j = parse(text, "input file");
    std::string format = j.value("format", "");
    if (format == "chausim-tally/1") return FileKind::tally;
    if (format == "chausim-decoy/1") return FileKind::decoy;
    return FileKind::unknown;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace chausim::io
