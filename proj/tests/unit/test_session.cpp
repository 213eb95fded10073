#include "../support.hpp"

#include "burrsim/record/recorder.hpp"
#include "burrsim/session/config.hpp"
#include "burrsim/session/session.hpp"
#include "burrsim/session/trajectory.hpp"

using namespace burrsim;
using burrsim::test::TempDir;
using burrsim::test::error_kind_of;

namespace {

template <typename T>
std::size_t count_of(const std::vector<EventRecord>& evs)
{
    return static_cast<std::size_t>(std::count_if(evs.begin(), evs.end(), [](const auto& e) {
        return std::holds_alternative<T>(e);
    }));
}

DrillInput idle_input()
{
    return DrillInput{Vec3{-50, -50, -50}, Quat{}, 0.0, kDefaultBurrId};
}

} // namespace

TEST(Config, DefaultsValidateAndRoundTrip)
{
    SessionConfig cfg;
    cfg.validate();
    cfg.sensitive = {2, 7};
    cfg.hardness = {{1, 2.5}};
    const auto back = config_from_json(to_json(cfg));
    EXPECT_EQ(to_json(back), to_json(cfg));
    EXPECT_EQ(back.hardness.at(1), 2.5);
    EXPECT_EQ(back.drill_model().sensitive, (std::set<Label>{2, 7}));
}

TEST(Config, ErrorsNameTheKey)
{
    auto expect_key = [](const nlohmann::json& j, const std::string& key) {
        try {
            (void)config_from_json(j);
            ADD_FAILURE() << "accepted " << j.dump();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::Validation);
            EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
        }
    };
    expect_key({{"tick_rate_hz", 0}}, "tick_rate_hz");
    expect_key({{"initial_burr", 99}}, "initial_burr");
    expect_key({{"audio", {{"F_max", -1}}}}, "F_max");
    expect_key({{"bogus", 1}}, "bogus");
    expect_key({{"burrs", nlohmann::json::array()}}, "burrs");
}

TEST(Config, CustomBurrsDefaultToLargestCutting)
{
    auto cfg = config_from_json({{"burrs",
                                  {{{"radius_mm", 1.0}, {"tip", "cutting"}, {"brr", 3.0}},
                                   {{"radius_mm", 3.0}, {"tip", "diamond"}, {"brr", 1.0}},
                                   {{"radius_mm", 2.0}, {"tip", "cutting"}, {"brr", 4.0}}}}});
    EXPECT_EQ(cfg.initial_burr, 2u);
}

TEST(Trajectory, LinearSampleAndHold)
{
    Trajectory t;
    const Quat q90 = normalized(Quat{1, 0, 0, 1});
    t.keyframes = {{0.0, Vec3{0, 0, 0}, Quat{}, 0.0, 1}, {2.0, Vec3{2, 4, 6}, q90, 1.0, 3}};
    t.validate(8);
    auto s = t.sample(0.5);
    EXPECT_EQ(s.tip_position, (Vec3{0.5, 1.0, 1.5}));
    EXPECT_DOUBLE_EQ(s.pedal, 0.25);
    EXPECT_EQ(s.burr_id, 1u);
    EXPECT_NEAR(s.tip_orientation.z, std::sin(3.14159265358979323846 / 16), 1e-12);
    EXPECT_EQ(t.sample(5.0).burr_id, 3u);
    EXPECT_EQ(t.sample(5.0).tip_position, (Vec3{2, 4, 6}));
    t.mode = Interpolation::Hold;
    EXPECT_EQ(t.sample(1.9).tip_position, Vec3{});

    const auto back = trajectory_from_json(to_json(t));
    EXPECT_EQ(back.keyframes.size(), 2u);
    EXPECT_EQ(back.mode, Interpolation::Hold);
    EXPECT_EQ(back.keyframes[1].orientation, q90);
}

TEST(Trajectory, ValidationErrors)
{
    Trajectory t;
    EXPECT_EQ(error_kind_of([&] { t.validate(8); }), ErrorKind::Validation);
    t.keyframes = {{0.0, Vec3{}, Quat{}, 0.0, 0}, {0.0, Vec3{}, Quat{}, 0.0, 0}};
    EXPECT_EQ(error_kind_of([&] { t.validate(8); }), ErrorKind::Validation);
    t.keyframes = {{0.0, Vec3{}, Quat{}, 0.0, 9}};
    EXPECT_EQ(error_kind_of([&] { t.validate(8); }), ErrorKind::Validation);
    t.keyframes = {{0.0, Vec3{}, Quat{2, 0, 0, 0}, 0.0, 0}};
    EXPECT_EQ(error_kind_of([&] { t.validate(8); }), ErrorKind::Validation);
    t.keyframes = {{0.0, Vec3{}, Quat{}, 1.5, 0}};
    EXPECT_EQ(error_kind_of([&] { t.validate(8); }), ErrorKind::Validation);
}

TEST(Session, IdleThousandStepsIsOneSecond)
{
    Session s(test::solid_cube(16), SessionConfig{});
    auto sink = std::make_shared<VectorSink>();
    s.add_sink(sink);
    const auto before = s.grid_digest();
    StepReport last;
    for (int n = 0; n < 1000; ++n) {
        last = s.step(idle_input());
        EXPECT_EQ(last.outcome.pitch, 2.0);
        EXPECT_EQ(last.outcome.F_haptic, Vec3{});
    }
    EXPECT_EQ(s.time(), 1.0);
    EXPECT_EQ(last.t, 1.0);
    EXPECT_EQ(s.tick_count(), 1000u);
    EXPECT_EQ(s.grid_digest(), before);
    EXPECT_EQ(s.removed_count(), 0u);
    EXPECT_EQ(count_of<KinematicsEvent>(sink->events), 1000u);
    EXPECT_EQ(count_of<ForceSampleEvent>(sink->events), 100u);
    EXPECT_EQ(count_of<BurrChangeEvent>(sink->events), 0u);
    EXPECT_EQ(event_time(sink->events.front()), 0.001);
}

TEST(Session, BurrChangeEmitsOnceBeforeRemovals)
{
    Session s(test::solid_cube(16), SessionConfig{});
    auto sink = std::make_shared<VectorSink>();
    s.add_sink(sink);
    DrillInput in{Vec3{8, 8, 8}, Quat{}, 1.0, 2};
    // 2 mm cutting burr: 4 damage units/s, so bone goes after 250 ticks.
    for (int n = 0; n < 400; ++n) {
        s.step(in);
    }
    ASSERT_EQ(count_of<BurrChangeEvent>(sink->events), 1u);
    ASSERT_TRUE(std::holds_alternative<BurrChangeEvent>(sink->events.front()));
    EXPECT_EQ(std::get<BurrChangeEvent>(sink->events.front()), (BurrChangeEvent{0.001, 2.0, BurrTip::Cutting}));
    EXPECT_EQ(s.burr_id(), 2u);
    EXPECT_GT(count_of<VoxelRemovedEvent>(sink->events), 0u);
}

TEST(Session, ErrorsOnBadInputsAndAfterClose)
{
    EXPECT_EQ(error_kind_of([] { Session s(LabeledVolume(GridGeometry{Dims{2, 2, 2}, Vec3{1, 1, 1}, Vec3{}}, test::bone_table()),
                                           SessionConfig{}); }),
              ErrorKind::Validation);
    SessionConfig bad;
    bad.tick_rate_hz = -1;
    EXPECT_EQ(error_kind_of([&] { Session s(test::solid_cube(4), bad); }), ErrorKind::Validation);

    Session s(test::solid_cube(8), SessionConfig{});
    EXPECT_EQ(error_kind_of([&] { s.step(DrillInput{Vec3{}, Quat{}, 0.0, 42}); }), ErrorKind::Validation);
    s.close();
    EXPECT_EQ(error_kind_of([&] { s.step(idle_input()); }), ErrorKind::State);
}

TEST(Session, SensitiveSegmentsWarn)
{
    Session s(test::slab_with_nerve(24), SessionConfig{});
    auto summary = s.run_script(test::plunge(24, 2.0, 2));
    EXPECT_GT(summary.warning_ticks, 0u);
    EXPECT_EQ(summary.warned_labels, (std::set<Label>{2}));
    EXPECT_GT(summary.removals, 0u);
}

TEST(Session, HighBrrPlungeMatchesSphereSweep)
{
    SessionConfig cfg;
    cfg.burrs = {Burr{2.0, BurrTip::Cutting, 5000.0}};
    cfg.initial_burr = 0;
    auto vol = test::solid_cube(24);
    const LabeledVolume initial = vol;
    Session s(vol, cfg);
    auto sink = std::make_shared<VectorSink>();
    s.add_sink(sink);
    const auto traj = test::plunge(24, 0.5, 0);
    s.run_script(traj);

    std::set<VoxelIndex> oracle;
    const auto steps = std::llround(traj.duration() * cfg.tick_rate_hz);
    for (long long n = 1; n <= steps; ++n) {
        const Vec3 tip = traj.sample(n / cfg.tick_rate_hz).tip_position;
        for (std::size_t lin = 0; lin < initial.labels().size(); ++lin) {
            const VoxelIndex v = initial.geometry().unlinear(lin);
            if (norm_squared(initial.geometry().voxel_to_world(v) - tip) <= 4.0) {
                oracle.insert(v);
            }
        }
    }
    std::set<VoxelIndex> removed;
    for (const auto& e : sink->events) {
        if (const auto* r = std::get_if<VoxelRemovedEvent>(&e)) {
            removed.insert(r->index);
        }
    }
    EXPECT_EQ(removed, oracle);
    EXPECT_EQ(s.removed_count(), oracle.size());
}

TEST(Session, DeterministicAcrossRuns)
{
    auto run = [] {
        Session s(test::slab_with_nerve(20), SessionConfig{});
        auto sink = std::make_shared<VectorSink>();
        s.add_sink(sink);
        s.run_script(test::plunge(20, 1.5, 4, 0.7));
        return std::make_pair(s.state_digest(), sink->events);
    };
    const auto a = run();
    const auto b = run();
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
}

TEST(Session, AsyncSinkDeliversSameStream)
{
    Session s(test::solid_cube(16), SessionConfig{});
    auto direct = std::make_shared<VectorSink>();
    auto inner = std::make_shared<VectorSink>();
    s.add_sink(direct);
    s.add_sink(std::make_shared<AsyncSink>(inner, 8));
    s.run_script(test::plunge(16, 0.8, 6));
    s.close();
    EXPECT_EQ(inner->events, direct->events);
}

TEST(Session, RecorderSinkStoresFinalDigest)
{
    TempDir tmp;
    Session s(test::solid_cube(16), SessionConfig{});
    s.add_sink(std::make_shared<RecorderSink>(open_recording(tmp / "rec", s.recording_meta("P1"), 500)));
    s.run_script(test::plunge(16, 0.6, 4));
    s.close();
    const auto m = read_manifest(tmp / "rec");
    EXPECT_EQ(m.final_digest, s.grid_digest());
    EXPECT_EQ(m.meta.anatomy_digest, s.initial_digest());
    const auto rec = read_recording(tmp / "rec");
    EXPECT_EQ(grid_digest(replay_to_grid(test::solid_cube(16), rec.meta, rec.events)), s.grid_digest());
}

TEST(Session, DecimatedRates)
{
    SessionConfig cfg;
    cfg.force_sample_rate_hz = 30.0;
    cfg.kinematics_rate_hz = 250.0;
    Session s(test::solid_cube(8), cfg);
    auto sink = std::make_shared<VectorSink>();
    s.add_sink(sink);
    for (int n = 0; n < 2000; ++n) {
        s.step(idle_input());
    }
    EXPECT_EQ(count_of<ForceSampleEvent>(sink->events), 60u);
    EXPECT_EQ(count_of<KinematicsEvent>(sink->events), 500u);
}
