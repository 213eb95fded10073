#include "burrsim/record/meta.hpp"

#include "burrsim/core/errors.hpp"

#include <chrono>
#include <ctime>

namespace burrsim {

using nlohmann::json;

json to_json(const SegmentTable& table)
{
    json arr = json::array();
    for (const auto& [label, seg] : table.entries()) {
        arr.push_back({{"label", label},
                       {"name", seg.name},
                       {"color", {seg.color.r, seg.color.g, seg.color.b}},
                       {"sensitive", seg.sensitive}});
    }
    return arr;
}

SegmentTable segments_from_json(const json& j)
{
    SegmentTable table;
    try {
        for (const auto& e : j) {
            Segment seg;
            seg.name = e.at("name").get<std::string>();
            const auto& c = e.at("color");
            seg.color = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
            seg.sensitive = e.value("sensitive", false);
            table.add(e.at("label").get<Label>(), std::move(seg));
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("segment table: ") + e.what());
    }
    return table;
}

json to_json(const GridGeometry& g)
{
    return {{"dims", {g.dims.x, g.dims.y, g.dims.z}},
            {"spacing", {g.spacing.x, g.spacing.y, g.spacing.z}},
            {"origin", {g.origin.x, g.origin.y, g.origin.z}}};
}

GridGeometry geometry_from_json(const json& j)
{
    GridGeometry g;
    try {
        const auto& d = j.at("dims");
        g.dims = {d.at(0).get<std::uint32_t>(), d.at(1).get<std::uint32_t>(), d.at(2).get<std::uint32_t>()};
        const auto& s = j.at("spacing");
        g.spacing = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
        const auto& o = j.at("origin");
        g.origin = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("grid geometry: ") + e.what());
    }
    g.validate();
    return g;
}

json to_json(const RecordingMeta& meta)
{
    return {{"schema_version", meta.schema_version},
            {"anatomy_digest", digest_hex(meta.anatomy_digest)},
            {"participant_id", meta.participant_id},
            {"config", meta.config},
            {"wall_clock_start", meta.wall_clock_start},
            {"tick_rate_hz", meta.tick_rate_hz},
            {"geometry", to_json(meta.geometry)},
            {"segments", to_json(meta.segments)}};
}

RecordingMeta meta_from_json(const json& j)
{
    RecordingMeta m;
    try {
        m.schema_version = j.at("schema_version").get<int>();
        m.anatomy_digest = parse_digest_hex(j.at("anatomy_digest").get<std::string>());
        m.participant_id = j.value("participant_id", "");
        m.config = j.value("config", json::object());
        m.wall_clock_start = j.value("wall_clock_start", "");
        m.tick_rate_hz = j.at("tick_rate_hz").get<double>();
        m.geometry = geometry_from_json(j.at("geometry"));
        m.segments = segments_from_json(j.at("segments"));
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("recording meta: ") + e.what());
    }
    if (m.schema_version != kSchemaVersion) {
        fail(ErrorKind::Unsupported, "recording schema version " + std::to_string(m.schema_version) +
                                         " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
    }
    return m;
}

std::string utc_now_iso8601()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace burrsim
