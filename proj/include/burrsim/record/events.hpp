#pragma once

#include "burrsim/core/vec.hpp"
#include "burrsim/drill/drill.hpp"
#include "burrsim/volume/volume.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

namespace burrsim {

// Group ids double as FVR1 block ids.
enum class EventGroup : std::uint8_t {
    Sequence = 0,
    VoxelsRemoved = 1,
    ForceFeedback = 2,
    BurrChange = 3,
    Kinematics = 4,
    DepthFrames = 5,
    DepthData = 6,
    // Reserved for gaze streams; never written.
    Pupil = 7,
};

std::string_view group_name(EventGroup group) noexcept;

struct VoxelRemovedEvent {
    double t = 0.0;
    VoxelIndex index;
    Label label = 0;
    std::array<float, 3> color{};

    friend bool operator==(const VoxelRemovedEvent&, const VoxelRemovedEvent&) = default;
};

struct ForceSampleEvent {
    double t = 0.0;
    Vec3 force;

    friend bool operator==(const ForceSampleEvent&, const ForceSampleEvent&) = default;
};

struct BurrChangeEvent {
    double t = 0.0;
    double radius_mm = 0.0;
    BurrTip tip = BurrTip::Cutting;

    friend bool operator==(const BurrChangeEvent&, const BurrChangeEvent&) = default;
};

struct KinematicsEvent {
    double t = 0.0;
    Pose drill;
    Pose camera;

    friend bool operator==(const KinematicsEvent&, const KinematicsEvent&) = default;
};

// Ground-truth frame from the synthetic camera; payload stored in the DepthData block.
struct DepthFrameEvent {
    double t = 0.0;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<float> depth_mm;
    std::vector<Label> labels;

    friend bool operator==(const DepthFrameEvent&, const DepthFrameEvent&) = default;
};

using EventRecord = std::variant<VoxelRemovedEvent, ForceSampleEvent, BurrChangeEvent, KinematicsEvent, DepthFrameEvent>;

double event_time(const EventRecord& ev) noexcept;
EventGroup event_group(const EventRecord& ev) noexcept;

// Bytes one fixed-width record of this group occupies before compression.
std::size_t record_width(EventGroup group) noexcept;

// Size of the same events written as an uncompressed log: a one-byte tag plus the fixed-width
// record each (depth frames add their raw payload).
std::size_t naive_log_size(const std::vector<EventRecord>& events) noexcept;

} // namespace burrsim
