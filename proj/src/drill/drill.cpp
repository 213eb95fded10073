#include "burrsim/drill/drill.hpp"

#include "burrsim/core/errors.hpp"
#include "burrsim/core/text.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace burrsim {

std::string_view to_string(BurrTip tip) noexcept
{
    return tip == BurrTip::Cutting ? "cutting" : "diamond";
}

BurrTip parse_burr_tip(const std::string& name)
{
    const std::string n = text::to_lower(name);
    if (n == "cutting") {
        return BurrTip::Cutting;
    }
    if (n == "diamond") {
        return BurrTip::Diamond;
    }
    fail(ErrorKind::Validation, "unknown burr tip '" + name + "' (cutting, diamond)");
}

std::vector<Burr> default_burr_catalog()
{
    std::vector<Burr> catalog;
    for (double r : {1.0, 2.0, 4.0, 6.0}) {
        catalog.push_back({r, BurrTip::Cutting, kCuttingBrrPerMm * r});
        catalog.push_back({r, BurrTip::Diamond, kDiamondBrrPerMm * r});
    }
    return catalog;
}

DrillInput sanitize(DrillInput input)
{
    require(is_unit(input.tip_orientation, 1e-6), "drill orientation must be a unit quaternion (tolerance 1e-6)");
    require(std::isfinite(input.tip_position.x) && std::isfinite(input.tip_position.y) &&
                std::isfinite(input.tip_position.z),
            "drill tip position must be finite");
    input.pedal = std::isfinite(input.pedal) ? std::clamp(input.pedal, 0.0, 1.0) : 0.0;
    return input;
}

std::vector<VoxelIndex> intersect_voxels(const LabeledVolume& vol, Vec3 tip, double radius_mm)
{
    require(radius_mm > 0.0, "burr radius must be > 0");
    const GridGeometry& g = vol.geometry();
    std::array<long long, 3> lo{};
    std::array<long long, 3> hi{};
    for (std::size_t d = 0; d < 3; ++d) {
        // One voxel of slack on each side; the distance test below is authoritative.
        const double a = std::floor((tip[d] - radius_mm - g.origin[d]) / g.spacing[d]) - 1.0;
        const double b = std::ceil((tip[d] + radius_mm - g.origin[d]) / g.spacing[d]) + 1.0;
        const double last = static_cast<double>(g.dims[d]) - 1.0;
        if (!(b >= 0.0) || !(a <= last)) {
            return {};
        }
        lo[d] = static_cast<long long>(std::max(a, 0.0));
        hi[d] = static_cast<long long>(std::min(b, last));
    }

    const double r2 = radius_mm * radius_mm;
    struct Hit {
        double d2;
        VoxelIndex v;
    };
    std::vector<Hit> hits;
    for (long long k = lo[2]; k <= hi[2]; ++k) {
        for (long long j = lo[1]; j <= hi[1]; ++j) {
            for (long long i = lo[0]; i <= hi[0]; ++i) {
                const VoxelIndex v{std::uint32_t(i), std::uint32_t(j), std::uint32_t(k)};
                if (vol.at(v) == 0) {
                    continue;
                }
                const double d2 = norm_squared(g.voxel_to_world(v) - tip);
                if (d2 <= r2) {
                    hits.push_back({d2, v});
                }
            }
        }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        return a.d2 != b.d2 ? a.d2 < b.d2 : a.v < b.v;
    });
    std::vector<VoxelIndex> out;
    out.reserve(hits.size());
    for (const Hit& h : hits) {
        out.push_back(h.v);
    }
    return out;
}

double ideal_sphere_voxels(const GridGeometry& geometry, double radius_mm) noexcept
{
    return 4.0 / 3.0 * std::numbers::pi * radius_mm * radius_mm * radius_mm / geometry.voxel_volume();
}

ContactState make_contact(const LabeledVolume& vol, std::vector<VoxelIndex> overlapped, double radius_mm)
{
    ContactState c;
    c.overlapped = std::move(overlapped);
    if (c.overlapped.empty()) {
        return c;
    }
    Vec3 sum;
    for (const VoxelIndex& v : c.overlapped) {
        sum += vol.geometry().voxel_to_world(v);
    }
    c.centroid = sum / static_cast<double>(c.overlapped.size());
    const double ideal = ideal_sphere_voxels(vol.geometry(), radius_mm);
    c.overlap_fraction = std::min(1.0, static_cast<double>(c.overlapped.size()) / std::max(ideal, 1.0));
    return c;
}

Vec3 collision_force(const ContactState& contact, Vec3 tip, const HapticConfig& cfg, double F_max) noexcept
{
    if (contact.overlapped.empty()) {
        return {};
    }
    const Vec3 away = tip - contact.centroid;
    const double len = norm(away);
    const Vec3 dir = len > 0.0 ? away / len : Vec3{0.0, 0.0, 1.0};
    const double magnitude = std::min(cfg.k_c * contact.overlap_fraction, F_max);
    return dir * magnitude;
}

double audio_pitch(Vec3 F_collision, const AudioConfig& cfg) noexcept
{
    return cfg.p_max - norm(F_collision) / cfg.F_max;
}

Vec3 haptic_force(Vec3 F_collision, bool drill_on, double t, const HapticConfig& cfg) noexcept
{
    if (!drill_on) {
        return F_collision;
    }
    const double v = cfg.A_drill * std::sin(cfg.f * t);
    return F_collision + Vec3{v, v, v};
}

std::vector<Warning> check_sensitive(const std::vector<Label>& contacted, const std::vector<Label>& removed,
                                     const SegmentTable& segments, const std::set<Label>& sensitive)
{
    std::map<Label, WarningKind> hits;
    for (Label l : contacted) {
        if (sensitive.contains(l)) {
            hits.emplace(l, WarningKind::Contact);
        }
    }
    for (Label l : removed) {
        if (sensitive.contains(l)) {
            hits[l] = WarningKind::Removal;
        }
    }
    std::vector<Warning> out;
    out.reserve(hits.size());
    for (const auto& [label, kind] : hits) {
        const Segment* seg = segments.find(label);
        out.push_back({label, seg ? seg->name : "label_" + std::to_string(label), kind});
    }
    return out;
}

TickOutcome apply_drill_tick(LabeledVolume& vol, DamageField& damage, const DrillInput& input, const Burr& burr,
                             double dt, double t, const DrillModel& model)
{
    require(dt > 0.0, "tick duration must be > 0");
    require(damage.dims() == vol.dims() && damage.values().size() == vol.labels().size(),
            "damage field dimensions do not match the volume");

    TickOutcome out;
    std::vector<VoxelIndex> overlapped = intersect_voxels(vol, input.tip_position, burr.radius_mm);
    std::vector<Label> contacted;
    contacted.reserve(overlapped.size());
    for (const VoxelIndex& v : overlapped) {
        contacted.push_back(vol.at(v));
    }
    const ContactState contact = make_contact(vol, std::move(overlapped), burr.radius_mm);
    out.contact_count = contact.overlapped.size();

    std::vector<Label> removed_labels;
    if (input.pedal > 0.0) {
        const float increment = static_cast<float>(input.pedal * burr.brr * dt);
        auto& dmg = damage.values();
        for (std::size_t n = 0; n < contact.overlapped.size(); ++n) {
            const VoxelIndex v = contact.overlapped[n];
            const std::size_t lin = vol.geometry().linear(v);
            dmg[lin] += increment;
            const Label l = contacted[n];
            if (static_cast<double>(dmg[lin]) >= model.hardness_of(l)) {
                vol.clear(v);
                dmg[lin] = 0.0f;
                out.removed.push_back({v, l});
                removed_labels.push_back(l);
            }
        }
    }

    out.F_collision = collision_force(contact, input.tip_position, model.haptic, model.audio.F_max);
    out.F_haptic = haptic_force(out.F_collision, input.pedal > 0.0, t, model.haptic);
    out.pitch = audio_pitch(out.F_collision, model.audio);
    out.warnings = check_sensitive(contacted, removed_labels, vol.segments(), model.sensitive);
    return out;
}

} // namespace burrsim
