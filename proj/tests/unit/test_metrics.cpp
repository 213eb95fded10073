#include "../support.hpp"

#include "burrsim/metrics/metrics.hpp"
#include "burrsim/record/recorder.hpp"
#include "burrsim/session/session.hpp"

#include <fstream>

using namespace burrsim;
using burrsim::test::TempDir;
using burrsim::test::error_kind_of;
using burrsim::test::rel_err;

namespace {

KinematicsSeries sine_series(double A, double w, double rate, double seconds)
{
    KinematicsSeries s;
    s.dt = 1.0 / rate;
    const auto n = static_cast<std::size_t>(std::llround(seconds * rate)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        s.positions.push_back(Vec3{A * std::sin(w * i * s.dt), 0.0, 0.0});
    }
    return s;
}

double max_abs_error(const std::vector<Vec3>& got, const KinematicsSeries& s, const std::function<double(double)>& f)
{
    double e = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        e = std::max(e, std::fabs(got[i].x - f(s.t0 + i * s.dt)));
    }
    return e;
}

} // namespace

TEST(Metrics, ConstantPositionHasZeroDerivatives)
{
    KinematicsSeries s{0.0, 1e-3, std::vector<Vec3>(50, Vec3{1.25, -3.5, 7.0})};
    auto m = kinematics_metrics(s);
    EXPECT_EQ(m.path_length, 0.0);
    EXPECT_EQ(m.speed->max, 0.0);
    EXPECT_EQ(m.acceleration->max, 0.0);
    EXPECT_EQ(m.jerk->max, 0.0);
}

TEST(Metrics, ConstantVelocityDyadicIsExact)
{
    KinematicsSeries s;
    s.dt = 1.0 / 1024.0;
    for (int i = 0; i < 2048; ++i) {
        s.positions.push_back(Vec3{0.125 * i, -0.0625 * i, 3.0});
    }
    auto m = kinematics_metrics(s);
    const double v = std::hypot(0.125, 0.0625) * 1024.0;
    EXPECT_LE(rel_err(m.speed->max, v), 1e-12);
    EXPECT_LE(rel_err(m.speed->mean, v), 1e-12);
    EXPECT_LE(m.acceleration->max, 1e-9);
    EXPECT_LE(m.jerk->max, 1e-9);
    EXPECT_LE(rel_err(m.path_length, std::hypot(0.125, 0.0625) * 2047), 1e-12);
}

TEST(Metrics, QuadraticMotionExactAcceleration)
{
    KinematicsSeries s;
    s.dt = 0.01;
    for (int i = 0; i < 100; ++i) {
        const double t = i * s.dt;
        s.positions.push_back(Vec3{1.5 * t * t, 0, 0});
    }
    auto a = derivative(s, 2);
    for (const auto& v : a) {
        EXPECT_NEAR(v.x, 3.0, 1e-8);
    }
    auto j = derivative(s, 3);
    for (const auto& v : j) {
        EXPECT_NEAR(v.x, 0.0, 1e-5);
    }
}

TEST(Metrics, SinusoidWithinTolerance)
{
    const double A = 5.0;
    const double w = 10.0;
    auto s = sine_series(A, w, 1000.0, 3.0);
    auto m = kinematics_metrics(s);
    EXPECT_LE(rel_err(m.acceleration->max, A * w * w), 1e-3);
    EXPECT_LE(rel_err(m.jerk->max, A * w * w * w), 1e-3);
    EXPECT_LE(rel_err(m.speed->max, A * w), 1e-3);
}

TEST(Metrics, DerivativesConvergeAtSecondOrder)
{
    const double A = 2.0;
    const double w = 3.0;
    const std::function<double(double)> exact[] = {
        [&](double t) { return A * w * std::cos(w * t); },
        [&](double t) { return -A * w * w * std::sin(w * t); },
        [&](double t) { return -A * w * w * w * std::cos(w * t); },
    };
    for (int order = 1; order <= 3; ++order) {
        auto coarse = sine_series(A, w, 100.0, 2.0);
        auto fine = sine_series(A, w, 200.0, 2.0);
        const double ec = max_abs_error(derivative(coarse, order), coarse, exact[order - 1]);
        const double ef = max_abs_error(derivative(fine, order), fine, exact[order - 1]);
        EXPECT_GE(std::log2(ec / ef), 1.8) << "order " << order;
    }
}

TEST(Metrics, ShortSeries)
{
    KinematicsSeries s{0.0, 0.1, {Vec3{}, Vec3{1, 0, 0}}};
    EXPECT_EQ(derivative(s, 1).size(), 2u);
    EXPECT_EQ(error_kind_of([&] { (void)derivative(s, 2); }), ErrorKind::InsufficientData);
    auto m = kinematics_metrics(s);
    EXPECT_TRUE(m.speed);
    EXPECT_FALSE(m.acceleration);
    EXPECT_FALSE(m.jerk);
    s.positions.push_back(Vec3{3, 0, 0});
    s.positions.push_back(Vec3{6, 0, 0});
    EXPECT_EQ(derivative(s, 3).size(), 4u);
}

TEST(Metrics, MakeSeriesResamplesNonUniform)
{
    std::vector<double> t{0.0, 0.1, 0.2, 0.35, 0.4, 0.5};
    std::vector<Vec3> p;
    for (double x : t) {
        p.push_back(Vec3{2.0 * x, 0, 0});
    }
    auto s = make_series(t, p);
    EXPECT_NEAR(s.dt, 0.1, 1e-15);
    ASSERT_EQ(s.positions.size(), 6u);
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
        EXPECT_NEAR(s.positions[i].x, 0.2 * i, 1e-12);
    }
    std::vector<double> u{0.0, 0.001, 0.002};
    auto su = make_series(u, {Vec3{}, Vec3{1, 0, 0}, Vec3{2, 0, 0}});
    EXPECT_EQ(su.positions[2].x, 2.0);
}

TEST(Metrics, ForceStats)
{
    EXPECT_FALSE(force_metrics({}));
    auto f = force_metrics({Vec3{3, 4, 0}, Vec3{0, 0, 1}});
    EXPECT_EQ(f->samples, 2u);
    EXPECT_DOUBLE_EQ(f->mean, 3.0);
    EXPECT_DOUBLE_EQ(f->max, 5.0);
}

TEST(Metrics, RemovalConservation)
{
    GridGeometry g{Dims{8, 8, 8}, Vec3{0.5, 0.5, 0.25}, Vec3{}};
    SegmentTable seg;
    seg.add(1, Segment{"Bone"});
    seg.add(2, Segment{"FacialNerve", Rgb{1, 1, 0}, true});
    std::vector<VoxelRemovedEvent> removed;
    std::mt19937 rng(4);
    std::uniform_int_distribution<int> lab(1, 3);
    for (std::uint32_t n = 0; n < 300; ++n) {
        removed.push_back({n * 1e-3, g.unlinear(n), Label(lab(rng)), {}});
    }
    auto r = removal_metrics(removed, g, seg, {1});
    std::uint64_t sum = r.unknown;
    for (const auto& [label, lr] : r.per_label) {
        sum += lr.count;
        EXPECT_DOUBLE_EQ(lr.volume_mm3, lr.count * g.voxel_volume());
    }
    EXPECT_EQ(sum, 300u);
    EXPECT_EQ(r.total, 300u);
    EXPECT_GT(r.unknown, 0u);
    EXPECT_FALSE(r.warnings.empty());
    EXPECT_TRUE(r.unintended);
    EXPECT_EQ(r.sensitive_counts.size(), 2u);
    EXPECT_TRUE(r.per_label.at(1).sensitive);
    EXPECT_TRUE(r.per_label.at(2).sensitive);
    EXPECT_EQ(r.points.size(), 300u);
}

TEST(Metrics, NoSensitiveRemovalIsIntended)
{
    GridGeometry g{Dims{4, 4, 4}, Vec3{1, 1, 1}, Vec3{}};
    SegmentTable seg;
    seg.add(1, Segment{"Bone"});
    auto r = removal_metrics({{0.0, VoxelIndex{1, 1, 1}, 1, {}}}, g, seg, {});
    EXPECT_FALSE(r.unintended);
    EXPECT_TRUE(r.sensitive_counts.empty());
}

TEST(Metrics, ReportFromRecordingMatchesLiveReport)
{
    TempDir tmp;
    Session s(test::slab_with_nerve(20), SessionConfig{});
    auto live = std::make_shared<VectorSink>();
    s.add_sink(live);
    const auto meta = s.recording_meta("P3");
    s.add_sink(std::make_shared<RecorderSink>(open_recording(tmp / "rec", meta, 700)));
    s.run_script(test::plunge(20, 1.5, 4));
    s.close();

    const std::string a = render_json(compute_report(meta, live->events));
    const std::string b = render_json(report(tmp / "rec"));
    EXPECT_EQ(a, b);

    const auto j = nlohmann::json::parse(a);
    EXPECT_EQ(j.dump(2) + "\n", a);
    EXPECT_EQ(j.at("participant_id"), "P3");
    EXPECT_EQ(j.at("removal").at("unintended"), true);
    EXPECT_FALSE(j.at("kinematics").at("jerk_mm_s3").is_null());
    EXPECT_NE(render_table(report(tmp / "rec")).find("removal"), std::string::npos);

    write_ply(tmp / "cloud.ply", report(tmp / "rec").removal.points);
    std::ifstream ply(tmp / "cloud.ply");
    std::string first;
    std::getline(ply, first);
    EXPECT_EQ(first, "ply");
}
