#include "burrsim/session/trajectory.hpp"

#include "burrsim/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace burrsim {

using nlohmann::json;

namespace {

void invalid(const std::string& msg) { fail(ErrorKind::Validation, "trajectory: " + msg); }

Vec3 vec_from(const json& j)
{
    if (!j.is_array() || j.size() != 3) {
        invalid("expected [x, y, z]");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Quat quat_from(const json& j)
{
    if (!j.is_array() || j.size() != 4) {
        invalid("expected quaternion [w, x, y, z]");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json to_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }
json to_json(const Quat& q) { return json::array({q.w, q.x, q.y, q.z}); }

} // namespace

void Trajectory::validate(std::size_t burr_count) const
{
    if (keyframes.empty()) {
        invalid("no keyframes");
    }
    if (keyframes.front().t != 0.0) {
        invalid("first keyframe must be at t=0");
    }
    for (std::size_t i = 0; i < keyframes.size(); ++i) {
        const Keyframe& k = keyframes[i];
        const std::string at = "keyframe " + std::to_string(i) + ": ";
        if (!std::isfinite(k.t)) {
            invalid(at + "non-finite time");
        }
        if (i > 0 && !(k.t > keyframes[i - 1].t)) {
            invalid(at + "times must be strictly increasing");
        }
        if (!std::isfinite(k.position.x) || !std::isfinite(k.position.y) || !std::isfinite(k.position.z)) {
            invalid(at + "non-finite position");
        }
        if (!is_unit(k.orientation)) {
            invalid(at + "orientation is not a unit quaternion");
        }
        if (!(k.pedal >= 0.0 && k.pedal <= 1.0)) {
            invalid(at + "pedal outside [0,1]");
        }
        if (k.burr_id >= burr_count) {
            invalid(at + "burr id " + std::to_string(k.burr_id) + " not in catalog");
        }
    }
    if (!is_unit(camera.orientation)) {
        invalid("camera orientation is not a unit quaternion");
    }
}

DrillInput Trajectory::sample(double t) const
{
    require(!keyframes.empty(), "trajectory has no keyframes");
    auto after = std::upper_bound(keyframes.begin(), keyframes.end(), t,
                                  [](double v, const Keyframe& k) { return v < k.t; });
    if (after == keyframes.begin()) {
        after = std::next(after);
    }
    const Keyframe& a = *std::prev(after);
    DrillInput in;
    in.burr_id = a.burr_id;
    if (after == keyframes.end() || mode == Interpolation::Hold) {
        in.tip_position = a.position;
        in.tip_orientation = a.orientation;
        in.pedal = a.pedal;
        return in;
    }
    const Keyframe& b = *after;
    const double u = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
    in.tip_position = a.position + (b.position - a.position) * u;
    in.tip_orientation = slerp(a.orientation, b.orientation, u);
    in.pedal = a.pedal + (b.pedal - a.pedal) * u;
    return in;
}

json to_json(const Trajectory& traj)
{
    json frames = json::array();
    for (const Keyframe& k : traj.keyframes) {
        frames.push_back({{"t", k.t},
                          {"pos", to_json(k.position)},
                          {"quat", to_json(k.orientation)},
                          {"pedal", k.pedal},
                          {"burr", k.burr_id}});
    }
    return {{"interpolation", traj.mode == Interpolation::Hold ? "hold" : "linear"},
            {"camera", {{"pos", to_json(traj.camera.position)}, {"quat", to_json(traj.camera.orientation)}}},
            {"keyframes", frames}};
}

Trajectory trajectory_from_json(const json& j)
{
    Trajectory traj;
    try {
        if (!j.is_object()) {
            invalid("document must be an object");
        }
        const std::string mode = j.value("interpolation", std::string("linear"));
        if (mode == "hold") {
            traj.mode = Interpolation::Hold;
        } else if (mode == "linear") {
            traj.mode = Interpolation::Linear;
        } else {
            invalid("unknown interpolation '" + mode + "'");
        }
        if (j.contains("camera")) {
            const json& c = j.at("camera");
            if (c.contains("pos")) {
                traj.camera.position = vec_from(c.at("pos"));
            }
            if (c.contains("quat")) {
                traj.camera.orientation = quat_from(c.at("quat"));
            }
        }
        if (!j.contains("keyframes") || !j.at("keyframes").is_array()) {
            invalid("missing keyframes array");
        }
        for (const json& f : j.at("keyframes")) {
            Keyframe k;
            k.t = f.at("t").get<double>();
            k.position = vec_from(f.at("pos"));
            if (f.contains("quat")) {
                k.orientation = quat_from(f.at("quat"));
            }
            k.pedal = f.value("pedal", 0.0);
            k.burr_id = f.value("burr", static_cast<std::uint32_t>(kDefaultBurrId));
            traj.keyframes.push_back(k);
        }
    } catch (const json::exception& e) {
        invalid(e.what());
    }
    return traj;
}

Trajectory load_trajectory(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::Io, "cannot open trajectory " + path.string());
    }
    try {
        return trajectory_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

} // namespace burrsim
