#pragma once

#include "burrsim/drill/drill.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace burrsim {

enum class Interpolation { Hold, Linear };

struct Keyframe {
    double t = 0.0;
    Vec3 position;
    Quat orientation;
    double pedal = 0.0;
    std::uint32_t burr_id = kDefaultBurrId;
};

// Scripted drill input. Positions and pedal interpolate per `mode`, orientation by slerp in
// linear mode; the burr always holds the earlier keyframe's value.
struct Trajectory {
    std::vector<Keyframe> keyframes;
    Interpolation mode = Interpolation::Linear;
    // Fixed camera pose echoed into kinematics.
    Pose camera;

    // Times strictly increasing from 0, unit quaternions, pedal in [0,1], burr ids < burr_count.
    void validate(std::size_t burr_count) const;
    [[nodiscard]] double duration() const noexcept { return keyframes.empty() ? 0.0 : keyframes.back().t; }
    [[nodiscard]] DrillInput sample(double t) const;
};

nlohmann::json to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const nlohmann::json& j);
Trajectory load_trajectory(const std::filesystem::path& path);

} // namespace burrsim
