#include "../support.hpp"

#include "burrsim/drill/drill.hpp"

#include <numbers>

using namespace burrsim;
using burrsim::test::error_kind_of;
using burrsim::test::rel_err;

namespace {

std::vector<VoxelIndex> brute_force(const LabeledVolume& vol, Vec3 tip, double r)
{
    const auto& g = vol.geometry();
    std::vector<std::pair<double, VoxelIndex>> hits;
    for (std::size_t n = 0; n < vol.labels().size(); ++n) {
        const VoxelIndex v = g.unlinear(n);
        if (vol.labels()[n] == 0) {
            continue;
        }
        const Vec3 c = g.voxel_to_world(v);
        const double d2 = (c.x - tip.x) * (c.x - tip.x) + (c.y - tip.y) * (c.y - tip.y) + (c.z - tip.z) * (c.z - tip.z);
        if (d2 <= r * r) {
            hits.emplace_back(d2, v);
        }
    }
    std::sort(hits.begin(), hits.end());
    std::vector<VoxelIndex> out;
    for (auto& h : hits) {
        out.push_back(h.second);
    }
    return out;
}

} // namespace

TEST(Drill, DefaultCatalog)
{
    auto c = default_burr_catalog();
    ASSERT_EQ(c.size(), 8u);
    EXPECT_EQ(c[kDefaultBurrId], (Burr{6.0, BurrTip::Cutting, 12.0}));
    EXPECT_EQ(c[1], (Burr{1.0, BurrTip::Diamond, 0.8}));
}

TEST(Drill, IntersectMatchesBruteForce)
{
    GridGeometry g{Dims{24, 20, 16}, Vec3{0.5, 0.75, 1.0}, Vec3{-2.0, 1.0, 0.5}};
    std::mt19937 rng(3);
    std::bernoulli_distribution solid(0.6);
    std::vector<Label> labels(g.dims.count());
    for (auto& l : labels) {
        l = solid(rng) ? 1 : 0;
    }
    LabeledVolume vol(g, std::move(labels), test::bone_table());
    std::uniform_real_distribution<double> ux(-6, 16), uy(-4, 20), uz(-4, 20), ur(0.3, 5.0);
    for (int n = 0; n < 200; ++n) {
        const Vec3 tip{ux(rng), uy(rng), uz(rng)};
        const double r = ur(rng);
        EXPECT_EQ(intersect_voxels(vol, tip, r), brute_force(vol, tip, r)) << "case " << n;
    }
}

TEST(Drill, IntersectOutsideGridIsEmpty)
{
    auto vol = test::solid_cube(8);
    EXPECT_TRUE(intersect_voxels(vol, Vec3{100, 100, 100}, 2.0).empty());
    EXPECT_TRUE(intersect_voxels(vol, Vec3{-3.01, 4, 4}, 3.0).empty());
    EXPECT_EQ(intersect_voxels(vol, Vec3{-3.0, 4, 4}, 3.0).size(), 1u);
}

TEST(Drill, PitchIsClosedForm)
{
    AudioConfig cfg{2.0, 4.0};
    EXPECT_DOUBLE_EQ(audio_pitch(Vec3{}, cfg), 2.0);
    EXPECT_DOUBLE_EQ(audio_pitch(Vec3{3, 4, 0}, cfg), 2.0 - 5.0 / 4.0);
    EXPECT_DOUBLE_EQ(audio_pitch(Vec3{0, 0, 4}, cfg), 1.0);
}

TEST(Drill, HapticAddsSinusoidOnEveryAxisWhileRunning)
{
    HapticConfig cfg;
    const Vec3 F{0.5, -1.0, 2.0};
    const double t = 0.0123;
    const double v = 0.25 * std::sin(2.0 * std::numbers::pi * 50.0 * t);
    const Vec3 h = haptic_force(F, true, t, cfg);
    EXPECT_LE(rel_err(h.x, F.x + v), 1e-12);
    EXPECT_LE(rel_err(h.y, F.y + v), 1e-12);
    EXPECT_LE(rel_err(h.z, F.z + v), 1e-12);
    EXPECT_EQ(haptic_force(F, false, t, cfg), F);
}

TEST(Drill, CollisionForcePointsAwayAndSaturates)
{
    auto vol = test::solid_cube(16);
    HapticConfig cfg;
    const Vec3 tip{8, 8, 15.5};
    auto contact = make_contact(vol, intersect_voxels(vol, tip, 2.0), 2.0);
    ASSERT_FALSE(contact.overlapped.empty());
    const Vec3 F = collision_force(contact, tip, cfg, 4.0);
    EXPECT_GT(F.z, 0.0);
    EXPECT_NEAR(F.x, 0.0, 1e-12);
    EXPECT_NEAR(norm(F), std::min(cfg.k_c * contact.overlap_fraction, 4.0), 1e-12);

    auto buried = make_contact(vol, intersect_voxels(vol, Vec3{8, 8, 8}, 2.0), 2.0);
    EXPECT_EQ(buried.centroid, (Vec3{8, 8, 8}));
    const Vec3 Fb = collision_force(buried, Vec3{8, 8, 8}, cfg, 4.0);
    EXPECT_EQ(Fb, (Vec3{0, 0, 4.0}));
    EXPECT_EQ(collision_force(ContactState{}, tip, cfg, 4.0), Vec3{});
}

TEST(Drill, DamageAccumulatesToHardness)
{
    auto vol = test::solid_cube(8);
    DamageField dmg(vol.dims());
    DrillModel model;
    const Burr burr{0.4, BurrTip::Cutting, 100.0};
    DrillInput in{Vec3{4, 4, 4}, Quat{}, 1.0, 0};
    // 100 * 1e-3 = 0.1 per tick: bone goes on the tenth tick (float accumulation may need one more).
    std::size_t ticks = 0;
    while (vol.at(4, 4, 4) != 0 && ticks < 20) {
        auto out = apply_drill_tick(vol, dmg, in, burr, 1e-3, ticks * 1e-3, model);
        ++ticks;
        if (vol.at(4, 4, 4) == 0) {
            ASSERT_EQ(out.removed.size(), 1u);
            EXPECT_EQ(out.removed[0], (RemovedVoxel{VoxelIndex{4, 4, 4}, 1}));
        }
    }
    EXPECT_GE(ticks, 10u);
    EXPECT_LE(ticks, 11u);
    EXPECT_EQ(dmg.values()[vol.geometry().linear(4, 4, 4)], 0.0f);
}

TEST(Drill, PedalOffRemovesNothingButStillPushes)
{
    auto vol = test::solid_cube(8);
    DamageField dmg(vol.dims());
    DrillModel model;
    const Burr burr{2.0, BurrTip::Cutting, 1e6};
    auto out = apply_drill_tick(vol, dmg, DrillInput{Vec3{4, 4, 7.5}, Quat{}, 0.0, 0}, burr, 1e-3, 0.0, model);
    EXPECT_TRUE(out.removed.empty());
    EXPECT_GT(norm(out.F_collision), 0.0);
    EXPECT_EQ(out.F_haptic, out.F_collision);
    EXPECT_EQ(vol.count_nonzero(), 512u);
}

TEST(Drill, ContactAndForceUsePreRemovalOverlap)
{
    auto vol = test::solid_cube(8);
    DamageField dmg(vol.dims());
    DrillModel model;
    const Burr burr{1.5, BurrTip::Cutting, 1e6};
    const DrillInput in{Vec3{4, 4, 4}, Quat{}, 1.0, 0};
    const auto expected = intersect_voxels(vol, in.tip_position, burr.radius_mm);
    auto out = apply_drill_tick(vol, dmg, in, burr, 1e-3, 0.0, model);
    EXPECT_EQ(out.contact_count, expected.size());
    EXPECT_EQ(out.removed.size(), expected.size());
    EXPECT_EQ(out.F_collision, (Vec3{0, 0, std::min(model.haptic.k_c * std::min(1.0, expected.size() /
                                                                                       ideal_sphere_voxels(vol.geometry(), 1.5)),
                                                      model.audio.F_max)}));
}

TEST(Drill, SensitiveWarningsSortedRemovalOutranksContact)
{
    SegmentTable t;
    t.add(1, Segment{"Bone"});
    t.add(5, Segment{"FacialNerve"});
    t.add(3, Segment{"Dura"});
    const std::set<Label> sensitive{3, 5};
    auto w = check_sensitive({1, 5, 3, 5}, {5}, t, sensitive);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(w[0], (Warning{3, "Dura", WarningKind::Contact}));
    EXPECT_EQ(w[1], (Warning{5, "FacialNerve", WarningKind::Removal}));
    EXPECT_TRUE(check_sensitive({1}, {1}, t, sensitive).empty());
}

TEST(Drill, SanitizeClampsPedalAndRejectsBadQuaternion)
{
    auto in = sanitize(DrillInput{Vec3{}, Quat{}, 3.0, 0});
    EXPECT_EQ(in.pedal, 1.0);
    EXPECT_EQ(sanitize(DrillInput{Vec3{}, Quat{}, -1.0, 0}).pedal, 0.0);
    EXPECT_EQ(error_kind_of([] { (void)sanitize(DrillInput{Vec3{}, Quat{1.1, 0, 0, 0}, 0.0, 0}); }),
              ErrorKind::Contract);
}

TEST(Drill, HighBrrSweepEqualsUnionOfSpheres)
{
    auto vol = test::solid_cube(20);
    const LabeledVolume initial = vol;
    DamageField dmg(vol.dims());
    DrillModel model;
    const Burr burr{2.5, BurrTip::Cutting, 5000.0};
    std::set<VoxelIndex> oracle;
    std::set<VoxelIndex> removed;
    for (int n = 0; n <= 60; ++n) {
        const Vec3 tip{10.0 + 0.1 * n, 10.0 - 0.05 * n, 22.0 - 0.25 * n};
        for (auto v : brute_force(initial, tip, burr.radius_mm)) {
            oracle.insert(v);
        }
        auto out = apply_drill_tick(vol, dmg, DrillInput{tip, Quat{}, 1.0, 0}, burr, 1e-3, n * 1e-3, model);
        for (auto& r : out.removed) {
            EXPECT_TRUE(removed.insert(r.index).second);
        }
    }
    EXPECT_FALSE(oracle.empty());
    EXPECT_EQ(removed, oracle);
    EXPECT_EQ(vol.count_nonzero(), initial.count_nonzero() - oracle.size());
}
