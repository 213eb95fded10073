#pragma once

#include "burrsim/core/vec.hpp"
#include "burrsim/drill/drill.hpp"
#include "burrsim/volume/volume.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace burrsim::wire {

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::uint8_t kFrameVersion = 1;
// u32 length + u8 tag + u8 version.
inline constexpr std::size_t kFrameHeaderBytes = 6;
inline constexpr std::size_t kDefaultMaxFrameBytes = 16u << 20;

enum class Tag : std::uint8_t {
    Hello = 1,
    VolumeSnapshot = 2,
    InputFrame = 3,
    StateFrame = 4,
    BurrList = 5,
    Ack = 6,
    Error = 7,
    Join = 8,
};

enum class ErrorCode : std::uint16_t {
    Busy = 1,
    Unsupported = 2,
    SlowConsumer = 3,
    Framing = 4,
    BadRequest = 5,
};

enum class Role : std::uint8_t { Controller = 0, Spectator = 1 };

struct WireSegment {
    Label label = 0;
    std::string name;
    std::array<float, 3> color{};
    bool sensitive = false;

    friend bool operator==(const WireSegment&, const WireSegment&) = default;
};

struct Hello {
    std::uint16_t protocol_version = kProtocolVersion;
    Role role = Role::Spectator;
    std::uint64_t session_token = 0;
    std::uint64_t digest = 0;
    Dims dims;
    Vec3 spacing;
    Vec3 origin;
    double tick_rate_hz = 0.0;
    double state_rate_hz = 0.0;
    // Seq of the last StateFrame folded into the snapshot that follows.
    std::uint64_t base_seq = 0;
    std::vector<WireSegment> segments;

    friend bool operator==(const Hello&, const Hello&) = default;
};

// One slice of the DEFLATE-compressed little-endian u16 label array.
struct VolumeSnapshot {
    std::uint32_t chunk_index = 0;
    std::uint32_t chunk_total = 0;
    std::uint32_t raw_bytes = 0;
    std::vector<std::uint8_t> data;

    friend bool operator==(const VolumeSnapshot&, const VolumeSnapshot&) = default;
};

struct InputFrame {
    std::uint64_t seq = 0;
    DrillInput input;
    Pose camera;

    friend bool operator==(const InputFrame& a, const InputFrame& b)
    {
        return a.seq == b.seq && a.input.tip_position == b.input.tip_position &&
               a.input.tip_orientation == b.input.tip_orientation && a.input.pedal == b.input.pedal &&
               a.input.burr_id == b.input.burr_id && a.camera == b.camera;
    }
};

struct DeltaVoxel {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    std::uint32_t k = 0;
    Label label = 0;

    friend bool operator==(const DeltaVoxel&, const DeltaVoxel&) = default;
};

struct WireWarning {
    Label label = 0;
    WarningKind kind = WarningKind::Contact;

    friend bool operator==(const WireWarning&, const WireWarning&) = default;
};

struct StateFrame {
    std::uint64_t seq = 0;
    std::uint64_t tick = 0;
    double t = 0.0;
    Pose drill;
    Vec3 F_collision;
    Vec3 F_haptic;
    double pitch = 0.0;
    std::uint32_t burr_id = 0;
    double pedal = 0.0;
    // Seq of the InputFrame applied on the frame's last tick; 0 before any input.
    std::uint64_t input_seq = 0;
    // Server grid digest after this frame's removals, present on verification frames.
    std::optional<std::uint64_t> digest;
    std::vector<WireWarning> warnings;
    std::vector<DeltaVoxel> delta;

    friend bool operator==(const StateFrame&, const StateFrame&) = default;
};

struct BurrList {
    std::vector<Burr> burrs;
    std::uint32_t current = 0;

    friend bool operator==(const BurrList&, const BurrList&) = default;
};

// Keepalive; the server echoes it.
struct Ack {
    std::uint64_t seq = 0;

    friend bool operator==(const Ack&, const Ack&) = default;
};

struct ErrorMsg {
    ErrorCode code = ErrorCode::BadRequest;
    std::string text;

    friend bool operator==(const ErrorMsg&, const ErrorMsg&) = default;
};

// First client message.
struct Join {
    Role role = Role::Spectator;
    std::uint64_t token = 0;

    friend bool operator==(const Join&, const Join&) = default;
};

using Message = std::variant<Hello, VolumeSnapshot, InputFrame, StateFrame, BurrList, Ack, ErrorMsg, Join>;

Tag tag_of(const Message& m) noexcept;

// Complete frame including the length prefix.
std::vector<std::uint8_t> encode(const Message& m);
void encode_into(std::vector<std::uint8_t>& out, const Message& m);

// Decodes exactly one complete frame. Unsupported for an unknown tag or version, Framing for a
// length mismatch, an oversized frame or a payload that ends early.
Message decode(std::span<const std::uint8_t> frame, std::size_t max_frame_bytes = kDefaultMaxFrameBytes);

// Splits a byte stream into frames.
class FrameReader {
public:
    explicit FrameReader(std::size_t max_frame_bytes = kDefaultMaxFrameBytes) : max_(max_frame_bytes) {}

    void feed(std::span<const std::uint8_t> bytes);
    // Next complete frame, or nullopt when more bytes are needed. An announced length beyond the
    // limit raises Framing and the stream cannot be resynchronized.
    std::optional<std::vector<std::uint8_t>> next_frame();
    [[nodiscard]] std::size_t buffered() const noexcept { return buf_.size() - pos_; }

private:
    std::size_t max_;
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

// Labels of `vol` as compressed snapshot chunks of at most `chunk_bytes` compressed bytes each.
std::vector<VolumeSnapshot> make_snapshot(std::span<const Label> labels, std::size_t chunk_bytes);

std::vector<WireSegment> to_wire(const SegmentTable& table);
SegmentTable from_wire(const std::vector<WireSegment>& segments);

} // namespace burrsim::wire
