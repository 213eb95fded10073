#include "burrsim/metrics/metrics.hpp"

#include "burrsim/core/errors.hpp"
#include "burrsim/core/text.hpp"
#include "burrsim/record/recorder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace burrsim {

using nlohmann::json;

KinematicsSeries make_series(const std::vector<double>& t, const std::vector<Vec3>& positions)
{
    require(t.size() == positions.size(), "time and position counts differ");
    KinematicsSeries s;
    const std::size_t n = t.size();
    if (n == 0) {
        return s;
    }
    s.t0 = t.front();
    if (n == 1) {
        s.positions = positions;
        return s;
    }
    for (std::size_t i = 1; i < n; ++i) {
        require(t[i] > t[i - 1], "kinematics samples must be strictly time-ordered");
    }
    const double span = t.back() - t.front();
    const double mean_dt = span / static_cast<double>(n - 1);
    bool uniform = true;
    for (std::size_t i = 1; i < n && uniform; ++i) {
        uniform = std::fabs((t[i] - t[0]) - mean_dt * static_cast<double>(i)) <= 1e-9;
    }
    if (uniform) {
        s.dt = mean_dt;
        s.positions = positions;
        return s;
    }
    std::vector<double> gaps(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        gaps[i - 1] = t[i] - t[i - 1];
    }
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
    s.dt = gaps[gaps.size() / 2];
    const auto count = static_cast<std::size_t>(std::floor(span / s.dt + 1e-9)) + 1;
    s.positions.reserve(count);
    std::size_t seg = 0;
    for (std::size_t m = 0; m < count; ++m) {
        const double tm = s.t0 + s.dt * static_cast<double>(m);
        while (seg + 2 < n && t[seg + 1] < tm) {
            ++seg;
        }
        const double u = std::clamp((tm - t[seg]) / (t[seg + 1] - t[seg]), 0.0, 1.0);
        s.positions.push_back(positions[seg] + (positions[seg + 1] - positions[seg]) * u);
    }
    return s;
}

std::vector<Vec3> derivative(const KinematicsSeries& series, int order)
{
    require(order >= 1 && order <= 3, "derivative order must be 1, 2 or 3");
    const auto& x = series.positions;
    const std::size_t n = x.size();
    if (n < static_cast<std::size_t>(order) + 1) {
        fail(ErrorKind::InsufficientData, "order-" + std::to_string(order) + " derivative needs at least " +
                                               std::to_string(order + 1) + " samples, have " + std::to_string(n));
    }
    require(series.dt > 0.0, "series spacing must be positive");
    const double h = series.dt;
    std::vector<Vec3> d(n);

    if (order == 1) {
        if (n == 2) {
            d[0] = d[1] = (x[1] - x[0]) / h;
            return d;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            d[i] = (x[i + 1] - x[i - 1]) / (2.0 * h);
        }
        d[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h);
        d[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * h);
        return d;
    }

    const double h2 = h * h;
    if (order == 2) {
        if (n == 3) {
            d[0] = d[1] = d[2] = (x[0] - 2.0 * x[1] + x[2]) / h2;
            return d;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            d[i] = (x[i + 1] - 2.0 * x[i] + x[i - 1]) / h2;
        }
        d[0] = (2.0 * x[0] - 5.0 * x[1] + 4.0 * x[2] - x[3]) / h2;
        d[n - 1] = (2.0 * x[n - 1] - 5.0 * x[n - 2] + 4.0 * x[n - 3] - x[n - 4]) / h2;
        return d;
    }

    const double h3 = h2 * h;
    auto plain = [&](std::size_t b) { return (x[b + 3] - 3.0 * x[b + 2] + 3.0 * x[b + 1] - x[b]) / h3; };
    if (n == 4) {
        d[0] = d[1] = d[2] = d[3] = plain(0);
        return d;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= 2 && i + 2 < n) {
            d[i] = (x[i + 2] - 2.0 * x[i + 1] + 2.0 * x[i - 1] - x[i - 2]) / (2.0 * h3);
        } else if (i + 4 < n) {
            d[i] = (-2.5 * x[i] + 9.0 * x[i + 1] - 12.0 * x[i + 2] + 7.0 * x[i + 3] - 1.5 * x[i + 4]) / h3;
        } else if (i >= 4) {
            d[i] = (2.5 * x[i] - 9.0 * x[i - 1] + 12.0 * x[i - 2] - 7.0 * x[i - 3] + 1.5 * x[i - 4]) / h3;
        } else {
            d[i] = plain(std::min(i > 0 ? i - 1 : 0, n - 4));
        }
    }
    return d;
}

MagnitudeStats magnitude_stats(const std::vector<Vec3>& values) noexcept
{
    MagnitudeStats s;
    if (values.empty()) {
        return s;
    }
    double sum = 0.0;
    for (const Vec3& v : values) {
        const double m = norm(v);
        sum += m;
        s.max = std::fmax(s.max, m);
    }
    s.mean = sum / static_cast<double>(values.size());
    return s;
}

KinematicsMetrics kinematics_metrics(const KinematicsSeries& series)
{
    KinematicsMetrics m;
    m.samples = series.positions.size();
    for (std::size_t i = 1; i < series.positions.size(); ++i) {
        m.path_length += norm(series.positions[i] - series.positions[i - 1]);
    }
    auto stats = [&](int order) -> std::optional<MagnitudeStats> {
        if (series.positions.size() < static_cast<std::size_t>(order) + 1) {
            return std::nullopt;
        }
        return magnitude_stats(derivative(series, order));
    };
    m.speed = stats(1);
    m.acceleration = stats(2);
    m.jerk = stats(3);
    return m;
}

std::optional<ForceStats> force_metrics(const std::vector<Vec3>& forces) noexcept
{
    if (forces.empty()) {
        return std::nullopt;
    }
    const MagnitudeStats s = magnitude_stats(forces);
    return ForceStats{forces.size(), s.mean, s.max};
}

RemovalMetrics removal_metrics(const std::vector<VoxelRemovedEvent>& removed, const GridGeometry& geometry,
                               const SegmentTable& segments, const std::set<Label>& sensitive)
{
    RemovalMetrics r;
    std::set<Label> warned;
    for (const VoxelRemovedEvent& ev : removed) {
        ++r.total;
        r.points.push_back({geometry.voxel_to_world(ev.index), ev.color});
        const Segment* seg = segments.find(ev.label);
        if (!seg) {
            ++r.unknown;
            if (warned.insert(ev.label).second) {
                r.warnings.push_back("removed voxels carry label " + std::to_string(ev.label) +
                                     " which has no segment entry; counted as unknown");
            }
            continue;
        }
        LabelRemoval& lr = r.per_label[ev.label];
        lr.name = seg->name;
        ++lr.count;
        lr.sensitive = seg->sensitive || sensitive.contains(ev.label);
        if (lr.sensitive) {
            r.unintended = true;
            ++r.sensitive_counts[ev.label];
        }
    }
    for (auto& [label, lr] : r.per_label) {
        lr.volume_mm3 = static_cast<double>(lr.count) * geometry.voxel_volume();
    }
    return r;
}

MetricsReport compute_report(const RecordingMeta& meta, const std::vector<EventRecord>& events)
{
    MetricsReport rep;
    rep.participant_id = meta.participant_id;
    rep.anatomy_digest = meta.anatomy_digest;
    rep.event_count = events.size();

    std::vector<double> kin_t;
    std::vector<Vec3> kin_pos;
    std::vector<Vec3> forces;
    std::vector<VoxelRemovedEvent> removed;
    for (const EventRecord& ev : events) {
        if (const auto* k = std::get_if<KinematicsEvent>(&ev)) {
            kin_t.push_back(k->t);
            kin_pos.push_back(k->drill.position);
        } else if (const auto* f = std::get_if<ForceSampleEvent>(&ev)) {
            forces.push_back(f->force);
        } else if (const auto* v = std::get_if<VoxelRemovedEvent>(&ev)) {
            removed.push_back(*v);
        } else if (std::holds_alternative<BurrChangeEvent>(ev)) {
            ++rep.burr_changes;
        }
    }
    if (!events.empty()) {
        rep.duration = event_time(events.back()) - event_time(events.front());
    }
    rep.kinematics = kinematics_metrics(make_series(kin_t, kin_pos));
    rep.force = force_metrics(forces);

    std::set<Label> sensitive;
    if (meta.config.is_object() && meta.config.contains("sensitive_labels")) {
        sensitive = meta.config.at("sensitive_labels").get<std::set<Label>>();
    }
    rep.removal = removal_metrics(removed, meta.geometry, meta.segments, sensitive);
    return rep;
}

MetricsReport report(const std::filesystem::path& recording_dir)
{
    const Recording rec = read_recording(recording_dir);
    return compute_report(rec.meta, rec.events);
}

namespace {

json stats_json(const std::optional<MagnitudeStats>& s)
{
    if (!s) {
        return nullptr;
    }
    return {{"mean", s->mean}, {"max", s->max}};
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

json to_json(const MetricsReport& r)
{
    json per_label = json::object();
    for (const auto& [label, lr] : r.removal.per_label) {
        per_label[std::to_string(label)] = {
            {"name", lr.name}, {"count", lr.count}, {"volume_mm3", lr.volume_mm3}, {"sensitive", lr.sensitive}};
    }
    json sensitive_counts = json::object();
    for (const auto& [label, n] : r.removal.sensitive_counts) {
        sensitive_counts[std::to_string(label)] = n;
    }
    json force = nullptr;
    if (r.force) {
        force = {{"samples", r.force->samples}, {"mean", r.force->mean}, {"max", r.force->max}};
    }
    return {{"participant_id", r.participant_id},
            {"anatomy_digest", digest_hex(r.anatomy_digest)},
            {"event_count", r.event_count},
            {"duration_s", r.duration},
            {"units", {{"length", "mm"}, {"time", "s"}, {"force", "N"}}},
            {"kinematics",
             {{"samples", r.kinematics.samples},
              {"path_length_mm", r.kinematics.path_length},
              {"speed_mm_s", stats_json(r.kinematics.speed)},
              {"acceleration_mm_s2", stats_json(r.kinematics.acceleration)},
              {"jerk_mm_s3", stats_json(r.kinematics.jerk)}}},
            {"force_N", force},
            {"removal",
             {{"total", r.removal.total},
              {"unknown", r.removal.unknown},
              {"unintended", r.removal.unintended},
              {"per_label", per_label},
              {"sensitive_counts", sensitive_counts}}},
            {"burr_changes", r.burr_changes}};
}

std::string render_json(const MetricsReport& r) { return to_json(r).dump(2) + "\n"; }

std::string render_table(const MetricsReport& r)
{
    std::ostringstream out;
    char line[160];
    auto row = [&](const std::string& key, const std::string& value) {
        std::snprintf(line, sizeof line, "%-24s %s\n", key.c_str(), value.c_str());
        out << line;
    };
    auto stat_row = [&](const std::string& key, const std::optional<MagnitudeStats>& s) {
        row(key, s ? "mean " + num(s->mean) + "  max " + num(s->max) : "n/a (insufficient data)");
    };
    row("participant", r.participant_id.empty() ? "-" : r.participant_id);
    row("anatomy digest", digest_hex(r.anatomy_digest));
    row("events", std::to_string(r.event_count));
    row("duration [s]", num(r.duration));
    row("kinematics samples", std::to_string(r.kinematics.samples));
    row("path length [mm]", num(r.kinematics.path_length));
    stat_row("speed [mm/s]", r.kinematics.speed);
    stat_row("acceleration [mm/s^2]", r.kinematics.acceleration);
    stat_row("jerk [mm/s^3]", r.kinematics.jerk);
    row("force [N]", r.force ? "mean " + num(r.force->mean) + "  max " + num(r.force->max) : "absent");
    row("burr changes", std::to_string(r.burr_changes));
    row("removed voxels", std::to_string(r.removal.total));
    row("unintended removal", r.removal.unintended ? "YES" : "no");
    out << "\n";
    std::snprintf(line, sizeof line, "%-8s %-20s %10s %14s %9s\n", "label", "segment", "voxels", "volume [mm^3]",
                  "sensitive");
    out << line;
    for (const auto& [label, lr] : r.removal.per_label) {
        std::snprintf(line, sizeof line, "%-8u %-20s %10llu %14s %9s\n", unsigned(label), lr.name.c_str(),
                      static_cast<unsigned long long>(lr.count), num(lr.volume_mm3).c_str(),
                      lr.sensitive ? "yes" : "no");
        out << line;
    }
    if (r.removal.unknown > 0) {
        std::snprintf(line, sizeof line, "%-8s %-20s %10llu %14s %9s\n", "?", "unknown",
                      static_cast<unsigned long long>(r.removal.unknown), "-", "-");
        out << line;
    }
    return out.str();
}

void write_ply(const std::filesystem::path& path, const std::vector<RemovedPoint>& points)
{
    std::ofstream out(path);
    if (!out) {
        fail(ErrorKind::Io, "cannot write " + path.string());
    }
    out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
        << "\nproperty double x\nproperty double y\nproperty double z\n"
           "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    auto byte = [](float c) { return static_cast<int>(std::lround(std::clamp(c, 0.0f, 1.0f) * 255.0f)); };
    for (const RemovedPoint& p : points) {
        out << text::format_double(p.world.x) << ' ' << text::format_double(p.world.y) << ' ' << text::format_double(p.world.z) << ' '
            << byte(p.color[0]) << ' ' << byte(p.color[1]) << ' ' << byte(p.color[2]) << '\n';
    }
    if (!out) {
        fail(ErrorKind::Io, "write failed for " + path.string());
    }
}

} // namespace burrsim
