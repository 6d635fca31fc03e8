#pragma once

#include <string>
#include <vector>

#include "chausim/montecarlo.hpp"
#include "chausim/security.hpp"

namespace chausim::config {

// Full run configuration: one structured text file with sections mirroring
// the module types (protocol, devices, run, attack, keyrate).
struct Config {
    protocol::ProtocolParams params;
    devices::DeviceChain devices;
    std::uint64_t packets = 1'000'000;
    std::uint64_t seed = 1;
    int workers = 0;  // 0 = all hardware threads
    mc::AttackSpec attack = mc::NoAttack{};
    security::KeyRateOptions keyrate;
};

// Parse/serialize the "chausim-config/1" JSON document (comments allowed).
Config parse_config(const std::string& text);
std::string dump_config(const Config& config);

// Resolve a preset name or read a config file from disk.
Config load_config(const std::string& name_or_path);

std::vector<std::string> preset_names();
Config preset(const std::string& name);

// FNV-1a over the canonical serialization; ties run artifacts to their input.
std::string config_hash_hex(const Config& config);

mc::RunConfig to_run_config(const Config& config);

// Attack descriptions ("chausim-attack/1") for reproducible adversarial runs.
mc::AttackSpec attack_from_json(const std::string& text);
std::string attack_to_json(const mc::AttackSpec& attack);

}  // namespace chausim::config
