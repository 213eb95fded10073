#pragma once

#include "burrsim/record/events.hpp"
#include "burrsim/record/meta.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace burrsim {

// Positions (mm) at t0 + n*dt.
struct KinematicsSeries {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<Vec3> positions;
};

// Uses the samples as-is when spacing is uniform within 1e-9 s, otherwise resamples at the
// median spacing by linear interpolation. Samples must be time-ordered.
KinematicsSeries make_series(const std::vector<double>& t, const std::vector<Vec3>& positions);

// Finite-difference derivative of the given order (1..3): central in the interior, second-order
// one-sided at the ends. InsufficientData when there are fewer than order+1 samples.
std::vector<Vec3> derivative(const KinematicsSeries& series, int order);

struct MagnitudeStats {
    double mean = 0.0;
    double max = 0.0;

    friend bool operator==(const MagnitudeStats&, const MagnitudeStats&) = default;
};

MagnitudeStats magnitude_stats(const std::vector<Vec3>& values) noexcept;

// Units: mm, mm/s, mm/s^2, mm/s^3. Stats absent when the series is too short.
struct KinematicsMetrics {
    std::size_t samples = 0;
    double path_length = 0.0;
    std::optional<MagnitudeStats> speed;
    std::optional<MagnitudeStats> acceleration;
    std::optional<MagnitudeStats> jerk;
};

KinematicsMetrics kinematics_metrics(const KinematicsSeries& series);

struct ForceStats {
    std::size_t samples = 0;
    double mean = 0.0;
    double max = 0.0;
};

// nullopt for no samples.
std::optional<ForceStats> force_metrics(const std::vector<Vec3>& forces) noexcept;

struct RemovedPoint {
    Vec3 world;
    std::array<float, 3> color{};
};

struct LabelRemoval {
    std::string name;
    std::uint64_t count = 0;
    double volume_mm3 = 0.0;
    bool sensitive = false;
};

struct RemovalMetrics {
    std::map<Label, LabelRemoval> per_label;
    // Removals whose label has no segment entry.
    std::uint64_t unknown = 0;
    std::uint64_t total = 0;
    bool unintended = false;
    std::map<Label, std::uint64_t> sensitive_counts;
    std::vector<RemovedPoint> points;
    std::vector<std::string> warnings;
};

RemovalMetrics removal_metrics(const std::vector<VoxelRemovedEvent>& removed, const GridGeometry& geometry,
                               const SegmentTable& segments, const std::set<Label>& sensitive);

struct MetricsReport {
    std::string participant_id;
    std::uint64_t anatomy_digest = 0;
    std::uint64_t event_count = 0;
    double duration = 0.0;
    KinematicsMetrics kinematics;
    std::optional<ForceStats> force;
    RemovalMetrics removal;
    std::uint64_t burr_changes = 0;
};

// Sensitive labels are those flagged in the segment table plus the recorded config's list.
MetricsReport compute_report(const RecordingMeta& meta, const std::vector<EventRecord>& events);
MetricsReport report(const std::filesystem::path& recording_dir);

// Canonical JSON: sorted keys, two-space indent, trailing newline.
nlohmann::json to_json(const MetricsReport& r);
std::string render_json(const MetricsReport& r);
std::string render_table(const MetricsReport& r);

// ASCII PLY point cloud of removed voxels with their segment colours.
void write_ply(const std::filesystem::path& path, const std::vector<RemovedPoint>& points);

} // namespace burrsim
