#pragma once

#include "burrsim/drill/drill.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <vector>

namespace burrsim {

struct SessionConfig {
    double tick_rate_hz = 1000.0;
    std::vector<Burr> burrs = default_burr_catalog();
    std::uint32_t initial_burr = kDefaultBurrId;
    AudioConfig audio;
    HapticConfig haptic;
    std::set<Label> sensitive;
    std::map<Label, double> hardness;
    // Events per recording batch file.
    std::uint64_t batch_size = 10000;
    double force_sample_rate_hz = 100.0;
    // 0 records kinematics every tick.
    double kinematics_rate_hz = 0.0;

    // Throws Validation naming the offending key.
    void validate() const;
    [[nodiscard]] DrillModel drill_model() const;
};

nlohmann::json to_json(const SessionConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
SessionConfig config_from_json(const nlohmann::json& j);
SessionConfig load_config(const std::filesystem::path& path);

} // namespace burrsim
