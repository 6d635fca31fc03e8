// chausim: simulator and key-rate calculator for a qubit-like time-bin qudit
// QKD system. Subcommands: simulate, keyrate, scan, optimize, validate,
// config. Exit codes: 0 ok, 2 configuration error, 3 runtime failure,
// 4 infeasible statistics.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "chausim/analytic.hpp"
#include "chausim/config.hpp"
#include "chausim/errors.hpp"
#include "chausim/montecarlo.hpp"
#include "chausim/optimizer.hpp"
#include "chausim/security.hpp"
#include "chausim/tally_io.hpp"
#include "chausim/version.hpp"

namespace {

using namespace chausim;

std::string default_workspace() {
    if (const char* env = std::getenv("CHAUSIM_WORKSPACE")) return env;
    return "runs";
}

mc::AttackSpec load_attack(const std::string& name_or_path) {
    if (name_or_path == "intercept_resend") return mc::InterceptResend{};
    if (name_or_path == "none") return mc::NoAttack{};
    return config::attack_from_json(io::read_file(name_or_path));
}

security::DecoyInputs inputs_from_estimates(const protocol::SiftTally& tally,
                                            const protocol::TallyEstimates& est) {
    if (tally.classes.size() != 3)
        throw ConfigError("key-rate extraction needs exactly three intensity classes");
    std::vector<int> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return tally.classes[static_cast<std::size_t>(a)].mean_photons >
               tally.classes[static_cast<std::size_t>(b)].mean_photons;
    });
    auto point = [&](int idx) {
        const auto& cls = tally.classes[static_cast<std::size_t>(idx)];
        const auto& ie = est.per_intensity[static_cast<std::size_t>(idx)];
        security::IntensityPoint p;
        p.label = cls.label;
        p.intensity = cls.mean_photons;
        p.probability = cls.probability;
        p.Q = ie.Q.value;
        p.Q_prime = ie.Q_prime.value;
        if (ie.E) p.E = ie.E->value;
        return p;
    };
    security::DecoyInputs in;
    in.signal = point(order[0]);
    in.decoy1 = point(order[1]);
    in.decoy2 = point(order[2]);
    return in;
}

int cmd_simulate(const std::string& config_arg, double packets, std::uint64_t seed,
                 int workers, const std::string& attack_arg, std::string out_dir) {
    config::Config cfg = config::load_config(config_arg);
    if (packets > 0.0) cfg.packets = static_cast<std::uint64_t>(packets);
    if (seed) cfg.seed = seed;
    if (workers >= 0) cfg.workers = workers;
    if (!attack_arg.empty()) cfg.attack = load_attack(attack_arg);

    mc::RunConfig rc = config::to_run_config(cfg);
    std::cerr << "simulating " << rc.n_packets << " packets (seed " << rc.seed << ", workers "
              << (rc.workers == 0 ? std::string("auto") : std::to_string(rc.workers)) << ")\n";
    mc::RunResult result = mc::run(rc);

    if (out_dir.empty()) out_dir = default_workspace();
    const std::string run_id = rc.config_hash;
    const auto dir = std::filesystem::path(out_dir) / run_id;
    std::filesystem::create_directories(dir);
    io::write_file((dir / "tally.json").string(),
                   io::tally_to_json(result.tally, result.estimates, result.provenance));
    io::write_file((dir / "config.json").string(), config::dump_config(cfg));

    std::cout << "run " << run_id << " -> " << (dir / "tally.json").string() << "\n";
    if (result.estimates) {
        for (const auto& ie : result.estimates->per_intensity) {
            std::cout << "  " << ie.label << ": Q=" << ie.Q.value << " Q'=" << ie.Q_prime.value;
            if (ie.E) std::cout << " E=" << ie.E->value;
            std::cout << "\n";
        }
    } else {
        std::cout << "  estimates undefined (some configuration had zero trials)\n";
    }
    return 0;
}

int cmd_keyrate(const std::string& input, double f_ec, const std::string& convention,
                const std::string& csv_path) {
    const std::string text = io::read_file(input);
    security::DecoyInputs inputs;
    security::KeyRateOptions options;
    int L = 5;

    switch (io::sniff_kind(text)) {
        case io::FileKind::tally: {
            auto parsed = io::tally_from_json(text);
            auto est = protocol::estimate(parsed.tally);
            inputs = inputs_from_estimates(parsed.tally, est);
            L = parsed.tally.L;
            break;
        }
        case io::FileKind::decoy: {
            auto file = io::decoy_from_json(text);
            inputs = file.inputs;
            options = file.options;
            L = file.L;
            break;
        }
        default:
            throw ConfigError("input is neither a tally nor a measured-statistics file");
    }
    if (f_ec > 0.0) options.f_ec = f_ec;
    if (!convention.empty()) {
        if (convention == "conditional") options.convention = security::SiftConvention::conditional;
        else if (convention == "folded") options.convention = security::SiftConvention::folded;
        else throw ConfigError("unknown sift convention '" + convention + "'");
    }

    auto est = security::decoy_bounds(inputs);
    auto result = security::keyrate_packet(inputs, est, L, options);
    std::cout << io::keyrate_to_json(result, inputs, L);
    if (!csv_path.empty()) {
        std::string csv = io::keyrate_csv_header() + io::keyrate_csv_row(input, result, inputs, L);
        io::write_file(csv_path, csv);
        std::cerr << "wrote " << csv_path << "\n";
    }
    return 0;
}

security::DecoyInputs analytic_inputs(const config::Config& cfg) {
    auto stats = analytic::expected_stats(cfg.params, cfg.devices);
    if (cfg.params.intensities.size() != 3)
        throw ConfigError("scan/optimize need exactly three intensity classes");
    std::vector<int> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return cfg.params.intensities[static_cast<std::size_t>(a)].mean_photons >
               cfg.params.intensities[static_cast<std::size_t>(b)].mean_photons;
    });
    auto point = [&](int idx) {
        const auto& cls = cfg.params.intensities[static_cast<std::size_t>(idx)];
        const auto& ie = stats.per_intensity[static_cast<std::size_t>(idx)];
        return security::IntensityPoint{cls.label, cls.mean_photons, cls.probability,
                                        ie.Q,      ie.Q_prime,       ie.E};
    };
    security::DecoyInputs in;
    in.signal = point(order[0]);
    in.decoy1 = point(order[1]);
    in.decoy2 = point(order[2]);
    return in;
}

int cmd_scan(const std::string& config_arg, double from, double to, double step,
             const std::string& out_path) {
    if (!(step > 0.0) || to < from) throw ConfigError("bad scan range");
    config::Config cfg = config::load_config(config_arg);
    std::string csv = io::keyrate_csv_header();
    for (double len = from; len <= to + 1e-9; len += step) {
        cfg.devices.channel.length_km = len;
        auto inputs = analytic_inputs(cfg);
        auto est = security::decoy_bounds(inputs);
        auto result = security::keyrate_packet(inputs, est, cfg.params.L, cfg.keyrate);
        std::ostringstream name;
        name << "scan:" << len << "km";
        csv += io::keyrate_csv_row(name.str(), result, inputs, cfg.params.L);
    }
    io::write_file(out_path, csv);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_optimize(const std::string& config_arg, std::vector<double> lengths, int multistarts,
                 std::uint64_t seed, const std::string& out_path) {
    if (lengths.empty()) throw ConfigError("no lengths given (use --lengths)");
    config::Config cfg = config::load_config(config_arg);
    opt::OptimizationSpec spec;
    spec.lengths_km = std::move(lengths);
    spec.base_params = cfg.params;
    spec.base_devices = cfg.devices;
    spec.keyrate = cfg.keyrate;
    if (multistarts > 0) spec.multistarts = multistarts;
    if (seed) spec.seed = seed;

    auto result = opt::optimize(spec);
    std::string csv = "length_km,mu,nu1,nu2,p_mu,p_nu1,p_nu2,R_packet,R_packet_raw,feasible\n";
    for (const auto& lr : result.per_length) {
        std::ostringstream os;
        os.precision(10);
        os << lr.length_km << ',' << lr.best.mu << ',' << lr.best.nu1 << ',' << lr.best.nu2 << ','
           << lr.best.p_mu << ',' << lr.best.p_nu1 << ',' << lr.best.p_nu2() << ',' << lr.rate
           << ',' << lr.rate_raw << ',' << (lr.feasible ? 1 : 0) << '\n';
        csv += os.str();
    }
    io::write_file(out_path, csv);
    std::cout << "wrote " << out_path << "\n";
    if (!result.any_key) {
        std::cerr << "no key at any requested length\n";
        return 4;
    }
    return 0;
}

int cmd_validate(std::vector<std::string> names, double packets, std::uint64_t seed,
                 const std::string& expected_out) {
    if (names.empty()) names = {"ideal", "fifty_km", "one_thirty_km"};
    bool all_ok = true;
    for (const auto& name : names) {
        config::Config cfg = config::load_config(name);
        cfg.packets = static_cast<std::uint64_t>(packets);
        cfg.seed = seed;
        auto rc = config::to_run_config(cfg);
        auto result = mc::run(rc);
        auto stats = analytic::expected_stats(cfg.params, cfg.devices);
        if (!expected_out.empty()) {
            std::filesystem::create_directories(expected_out);
            const auto stem = std::filesystem::path(name).stem().string();
            io::write_file((std::filesystem::path(expected_out) / (stem + "-expected.json")).string(),
                           io::expected_stats_to_json(stats));
        }
        const int P = protocol::pair_count(cfg.params.L);
        for (std::size_t c = 0; c < cfg.params.intensities.size(); ++c) {
            auto exp = analytic::expected_counts(stats, cfg.params, static_cast<int>(c), cfg.packets);
            double md = 0, me = 0, dd = 0;
            for (int a = 0; a < P; ++a)
                for (int b = 0; b < P; ++b) {
                    auto ov = protocol::classify_overlap(protocol::pair_from_index(a, cfg.params.L),
                                                         protocol::pair_from_index(b, cfg.params.L));
                    const auto& cell = result.tally.cell(static_cast<int>(c), a, b);
                    if (ov == protocol::PairOverlap::matched) {
                        md += static_cast<double>(cell.detected);
                        me += static_cast<double>(cell.errors);
                    } else if (ov == protocol::PairOverlap::disjoint) {
                        dd += static_cast<double>(cell.detected);
                    }
                }
            auto check = [&](const char* what, double obs, double expv, double var) {
                bool ok;
                if (expv >= 10.0) ok = std::abs(obs - expv) <= 3.0 * std::sqrt(var);
                else ok = obs <= expv + 3.0 * std::sqrt(expv) + 4.0;  // small-count guard
                all_ok = all_ok && ok;
                std::cout << (ok ? "  ok   " : "  FAIL ") << name << " "
                          << cfg.params.intensities[c].label << " " << what << ": observed " << obs
                          << " expected " << expv << " (sigma " << std::sqrt(var) << ")\n";
            };
            check("matched", md, exp.matched_detections, exp.matched_var);
            check("errors", me, exp.matched_errors, exp.error_var);
            check("disjoint", dd, exp.disjoint_detections, exp.disjoint_var);
        }
    }
    std::cout << (all_ok ? "validate: PASS" : "validate: FAIL") << "\n";
    return all_ok ? 0 : 3;
}

int cmd_config(bool list, const std::string& dump_name, const std::string& out_path) {
    if (list) {
        for (const auto& n : config::preset_names()) std::cout << n << "\n";
        return 0;
    }
    if (!dump_name.empty()) {
        auto text = config::dump_config(config::load_config(dump_name));
        if (out_path.empty()) std::cout << text;
        else {
            io::write_file(out_path, text);
            std::cout << "wrote " << out_path << "\n";
        }
        return 0;
    }
    throw ConfigError("config: nothing to do (use --list or --dump)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-bin qudit QKD simulator and key-rate toolkit"};
    app.set_version_flag("--version", std::string("chausim ") + chausim::kVersion);
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run the Monte Carlo engine and write a tally");
    std::string sim_config, sim_attack, sim_out;
    double sim_packets = 0.0;
    std::uint64_t sim_seed = 0;
    int sim_workers = -1;
    sim->add_option("--config", sim_config, "preset name or config file")->required();
    sim->add_option("--packets", sim_packets, "override packet count (1e8 style accepted)");
    sim->add_option("--seed", sim_seed, "override master seed");
    sim->add_option("--workers", sim_workers, "worker count (0 = all threads)");
    sim->add_option("--attack", sim_attack, "attack: intercept_resend, none, or a file");
    sim->add_option("--out", sim_out, "output directory (default $CHAUSIM_WORKSPACE or ./runs)");

    auto* kr = app.add_subcommand("keyrate", "key rate from a tally or measured-statistics file");
    std::string kr_input, kr_convention, kr_csv;
    double kr_fec = 0.0;
    kr->add_option("--input", kr_input, "tally.json or decoy.json")->required();
    kr->add_option("--f-ec", kr_fec, "error-correction inefficiency override (>= 1)");
    kr->add_option("--convention", kr_convention, "sift convention: conditional | folded");
    kr->add_option("--csv", kr_csv, "also write a CSV row here");

    auto* scan = app.add_subcommand("scan", "analytic rate vs distance at fixed source parameters");
    std::string scan_config, scan_out = "scan.csv";
    double scan_from = 0.0, scan_to = 160.0, scan_step = 10.0;
    scan->add_option("--config", scan_config, "preset name or config file")->required();
    scan->add_option("--from", scan_from, "start length, km");
    scan->add_option("--to", scan_to, "end length, km");
    scan->add_option("--step", scan_step, "step, km");
    scan->add_option("--out", scan_out, "output CSV path");

    auto* optc = app.add_subcommand("optimize", "optimize source parameters per length");
    std::string opt_config, opt_out = "optimize.csv";
    std::vector<double> opt_lengths;
    int opt_starts = 0;
    std::uint64_t opt_seed = 0;
    optc->add_option("--config", opt_config, "preset name or config file")->required();
    optc->add_option("--lengths", opt_lengths, "lengths in km")->delimiter(',');
    optc->add_option("--multistarts", opt_starts, "simplex starts per length");
    optc->add_option("--seed", opt_seed, "multistart seed");
    optc->add_option("--out", opt_out, "output CSV path");

    auto* val = app.add_subcommand("validate", "Monte Carlo vs analytic model cross-check");
    std::vector<std::string> val_configs;
    double val_packets = 1000000;
    std::uint64_t val_seed = 12345;
    std::string val_expected_out;
    val->add_option("--configs", val_configs, "preset names or config files")->delimiter(',');
    val->add_option("--packets", val_packets, "packets per configuration");
    val->add_option("--seed", val_seed, "master seed");
    val->add_option("--expected-out", val_expected_out,
                    "directory for the analytic expectation files");

    auto* cfg = app.add_subcommand("config", "list presets or dump one as JSON");
    bool cfg_list = false;
    std::string cfg_dump, cfg_out;
    cfg->add_flag("--list", cfg_list, "list preset names");
    cfg->add_option("--dump", cfg_dump, "preset or config file to dump");
    cfg->add_option("--out", cfg_out, "write instead of printing");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(sim_config, sim_packets, sim_seed, sim_workers, sim_attack, sim_out);
        if (kr->parsed()) return cmd_keyrate(kr_input, kr_fec, kr_convention, kr_csv);
        if (scan->parsed()) return cmd_scan(scan_config, scan_from, scan_to, scan_step, scan_out);
        if (optc->parsed()) return cmd_optimize(opt_config, opt_lengths, opt_starts, opt_seed, opt_out);
        if (val->parsed()) return cmd_validate(val_configs, val_packets, val_seed, val_expected_out);
        if (cfg->parsed()) return cmd_config(cfg_list, cfg_dump, cfg_out);
    } catch (const chausim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const chausim::InfeasibleStatistics& e) {
        std::cerr << "infeasible statistics: " << e.what() << "\n";
        return 4;
    } catch (const chausim::UndefinedEstimator& e) {
        std::cerr << "undefined estimator: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
