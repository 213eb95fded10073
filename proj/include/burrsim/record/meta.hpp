#pragma once

#include "burrsim/volume/volume.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>

namespace burrsim {

inline constexpr int kSchemaVersion = 1;

struct RecordingMeta {
    int schema_version = kSchemaVersion;
    std::uint64_t anatomy_digest = 0;
    std::string participant_id;
    nlohmann::json config = nlohmann::json::object();
    // ISO-8601 UTC.
    std::string wall_clock_start;
    double tick_rate_hz = 1000.0;
    // Anatomy placement and segments, so a recording is self-describing.
    GridGeometry geometry;
    SegmentTable segments;

    friend bool operator==(const RecordingMeta&, const RecordingMeta&) = default;
};

nlohmann::json to_json(const RecordingMeta& meta);
RecordingMeta meta_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SegmentTable& table);
SegmentTable segments_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GridGeometry& g);
GridGeometry geometry_from_json(const nlohmann::json& j);

std::string utc_now_iso8601();

} // namespace burrsim
