#pragma once

#include "burrsim/core/vec.hpp"
#include "burrsim/volume/volume.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace burrsim {

enum class BurrTip : std::uint8_t { Cutting = 0, Diamond = 1 };

std::string_view to_string(BurrTip tip) noexcept;
BurrTip parse_burr_tip(const std::string& name);

struct Burr {
    double radius_mm = 6.0;
    BurrTip tip = BurrTip::Cutting;
    // Damage units per second at full pedal; bone hardness is 1 unit.
    double brr = 12.0;

    friend bool operator==(const Burr&, const Burr&) = default;
};

inline constexpr double kCuttingBrrPerMm = 2.0;
inline constexpr double kDiamondBrrPerMm = 0.8;

// Radii {1,2,4,6} mm, each as cutting then diamond. Index 6 is the 6 mm cutting burr.
std::vector<Burr> default_burr_catalog();
inline constexpr std::size_t kDefaultBurrId = 6;

struct DrillInput {
    Vec3 tip_position;
    Quat tip_orientation;
    double pedal = 0.0;
    std::uint32_t burr_id = kDefaultBurrId;
};

// Clamps the pedal to [0,1]; a quaternion further than 1e-6 from unit norm is a contract violation.
DrillInput sanitize(DrillInput input);

struct AudioConfig {
    double p_max = 2.0;
    double F_max = 4.0;
};

struct HapticConfig {
    double A_drill = 0.25;
    // rad/s
    double f = 2.0 * 3.14159265358979323846 * 50.0;
    // N per unit overlap fraction
    double k_c = 8.0;
};

struct ContactState {
    std::vector<VoxelIndex> overlapped;
    Vec3 centroid;
    double overlap_fraction = 0.0;
};

enum class WarningKind : std::uint8_t { Contact = 0, Removal = 1 };

struct Warning {
    Label label = 0;
    std::string name;
    WarningKind kind = WarningKind::Contact;

    friend bool operator==(const Warning&, const Warning&) = default;
};

struct RemovedVoxel {
    VoxelIndex index;
    Label label = 0;

    friend bool operator==(const RemovedVoxel&, const RemovedVoxel&) = default;
};

struct TickOutcome {
    std::vector<RemovedVoxel> removed;
    Vec3 F_collision;
    Vec3 F_haptic;
    double pitch = 0.0;
    std::vector<Warning> warnings;
    std::size_t contact_count = 0;
};

// Per-voxel accumulated damage, same shape as the volume it shadows.
class DamageField {
public:
    DamageField() = default;
    explicit DamageField(const Dims& dims) : dims_(dims), values_(dims.count(), 0.0f) {}

    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] std::vector<float>& values() noexcept { return values_; }
    [[nodiscard]] const std::vector<float>& values() const noexcept { return values_; }

private:
    Dims dims_;
    std::vector<float> values_;
};

// Everything a tick needs besides the burr and pose.
struct DrillModel {
    AudioConfig audio;
    HapticConfig haptic;
    std::set<Label> sensitive;
    // Missing labels default to hardness 1.0.
    std::map<Label, double> hardness;

    [[nodiscard]] double hardness_of(Label label) const noexcept
    {
        auto it = hardness.find(label);
        return it == hardness.end() ? 1.0 : it->second;
    }
};

// In-bounds non-air voxels whose centres lie within `radius_mm` of `tip`, ordered by distance to the
// tip and then lexicographically by index.
std::vector<VoxelIndex> intersect_voxels(const LabeledVolume& vol, Vec3 tip, double radius_mm);

// Number of lattice voxels an ideal sphere of this radius covers (sphere volume / voxel volume).
double ideal_sphere_voxels(const GridGeometry& geometry, double radius_mm) noexcept;

ContactState make_contact(const LabeledVolume& vol, std::vector<VoxelIndex> overlapped, double radius_mm);

Vec3 collision_force(const ContactState& contact, Vec3 tip, const HapticConfig& cfg, double F_max) noexcept;

// p = p_max - |F_collision| / F_max
double audio_pitch(Vec3 F_collision, const AudioConfig& cfg) noexcept;

// F_haptic = F_collision + (1,1,1) * A_drill * sin(f t) while the drill runs.
Vec3 haptic_force(Vec3 F_collision, bool drill_on, double t, const HapticConfig& cfg) noexcept;

// One warning per distinct sensitive label, sorted by label; removal outranks contact.
std::vector<Warning> check_sensitive(const std::vector<Label>& contacted, const std::vector<Label>& removed,
                                     const SegmentTable& segments, const std::set<Label>& sensitive);

// Advances drilling by `dt` seconds at time `t`. Contact and forces use the pre-removal overlap.
TickOutcome apply_drill_tick(LabeledVolume& vol, DamageField& damage, const DrillInput& input, const Burr& burr,
                             double dt, double t, const DrillModel& model);

} // namespace burrsim
