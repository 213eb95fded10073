#include "burrsim/core/compress.hpp"
#include "burrsim/drill/drill.hpp"
#include "burrsim/gateway/server.hpp"
#include "burrsim/iso/isosmooth.hpp"
#include "burrsim/metrics/metrics.hpp"
#include "burrsim/record/recorder.hpp"
#include "burrsim/session/session.hpp"
#include "burrsim/volume/image_stack.hpp"
#include "burrsim/volume/nrrd.hpp"

#include "event_fixture.hpp"
#include "loopback.hpp"
#include "scenes.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

using namespace burrsim;
using namespace burrsim::test;

namespace {

// Every tolerance and budget used below.
constexpr double kFormulaRelTol = 1e-12;
constexpr std::size_t kFormulaTuples = 1000;
constexpr double kFormulaBudgetS = 1.0;

constexpr std::uint32_t kSphereGrid = 128;
constexpr double kSphereRadius = 0.35;
constexpr std::size_t kMinSurfaceHits = 10000;
constexpr double kUnitTol = 1e-6;
constexpr double kNormalsBudgetS = 30.0;

constexpr std::uint32_t kCarveGrid = 64;
constexpr int kCarveCases = 50;
constexpr double kCarveBudgetS = 60.0;

constexpr double kReplaySeconds = 60.0;

constexpr std::size_t kRecorderEvents = 100000;
constexpr std::uint64_t kRecorderBatch = 10000;
constexpr double kMaxCompressedFraction = 0.1;

constexpr double kMetricsRelTol = 1e-3;
constexpr double kConstantVelocityTol = 1e-9;

constexpr double kGatewaySeconds = 10.0;
constexpr double kGatewayStateHz = 60.0;
constexpr double kGatewaySpeed = 5.0;
constexpr int kInputsPerFrame = 3;
// Tick jitter is the standard deviation of tick intervals in one window. Baseline and stalled-reader
// windows alternate; jitter counts as unchanged when the stalled median stays within
// max(kJitterRatio * baseline median, baseline median + kJitterFloorS) and the mean interval within
// kMeanIntervalTol.
constexpr double kJitterRatio = 1.5;
constexpr double kJitterFloorS = 50e-6;
constexpr double kMeanIntervalTol = 0.02;
constexpr double kJitterWindowS = 1.0;
constexpr int kJitterPairs = 5;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

std::vector<VoxelIndex> brute_force(const LabeledVolume& vol, Vec3 tip, double r)
{
    std::vector<std::pair<double, std::size_t>> hits;
    const auto& g = vol.geometry();
    for (std::size_t n = 0; n < vol.labels().size(); ++n) {
        if (vol.labels()[n] == 0) {
            continue;
        }
        const double d2 = norm_squared(g.voxel_to_world(g.unlinear(n)) - tip);
        if (d2 <= r * r) {
            hits.emplace_back(d2, n);
        }
    }
    std::sort(hits.begin(), hits.end());
    std::vector<VoxelIndex> out;
    for (const auto& [d2, n] : hits) {
        out.push_back(g.unlinear(n));
    }
    return out;
}

Outcome force_and_pitch()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20261019);
    std::uniform_real_distribution<double> uf(-12.0, 12.0), up(0.5, 4.0), ufm(0.5, 10.0), ua(0.0, 1.0),
        ufreq(1.0, 2000.0), ut(0.0, 60.0);
    std::bernoulli_distribution on(0.8);
    double worst = 0.0;
    for (std::size_t n = 0; n < kFormulaTuples; ++n) {
        const Vec3 F{uf(rng), uf(rng), uf(rng)};
        const AudioConfig audio{up(rng), ufm(rng)};
        HapticConfig haptic;
        haptic.A_drill = ua(rng);
        haptic.f = ufreq(rng);
        const double t = ut(rng);
        const bool drilling = on(rng);

        const long double mag =
            std::sqrt(static_cast<long double>(F.x) * F.x + static_cast<long double>(F.y) * F.y +
                      static_cast<long double>(F.z) * F.z);
        const long double p_want = audio.p_max - mag / audio.F_max;
        const double p_got = audio_pitch(F, audio);
        worst = std::max(worst, static_cast<double>(std::fabs(p_got - p_want) / std::fabs(p_want)));

        const long double s = drilling ? haptic.A_drill * std::sin(static_cast<long double>(haptic.f * t)) : 0.0L;
        const long double wx = F.x + s, wy = F.y + s, wz = F.z + s;
        const Vec3 h = haptic_force(F, drilling, t, haptic);
        const long double ex = h.x - wx, ey = h.y - wy, ez = h.z - wz;
        const long double err = std::sqrt(ex * ex + ey * ey + ez * ez) / std::sqrt(wx * wx + wy * wy + wz * wz);
        worst = std::max(worst, static_cast<double>(err));
    }
    const double elapsed = seconds_since(t0);
    return {worst <= kFormulaRelTol && elapsed < kFormulaBudgetS,
            fmt("%zu tuples, max rel err %.3g (tol %.0e), %.3f s (budget %.0f s)", kFormulaTuples, worst,
                kFormulaRelTol, elapsed, kFormulaBudgetS)};
}

Outcome smoothed_normals()
{
    const auto t0 = Clock::now();
    const LabeledVolume vol = sphere_volume(kSphereGrid, kSphereRadius);
    const FieldView field(vol);
    const int rays = 200;
    double mean_err[2] = {0.0, 0.0};
    std::size_t hits[2] = {0, 0};
    double worst_unit = 0.0;
    bool exact_counts = true;
    const int kernels[2] = {1, 3};
    for (int kn = 0; kn < 2; ++kn) {
        RaycastParams params;
        params.kernel_n = kernels[kn];
        params.bisect_iters = 20;
        const SmoothingKernel kernel = SmoothingKernel::make(kernels[kn], vol.dims());
        const auto samples = static_cast<std::uint64_t>(kernels[kn]) * kernels[kn] * kernels[kn];
        for (int a = 0; a < rays; ++a) {
            for (int b = 0; b < rays; ++b) {
                const Vec3 o{(a + 0.5) / rays, (b + 0.5) / rays, 1.0};
                const auto hit = raycast_iso(field, o, Vec3{0, 0, -1}, params);
                if (!hit) {
                    continue;
                }
                ++hits[kn];
                worst_unit = std::max(worst_unit, std::fabs(norm(hit->eta) - 1.0));
                mean_err[kn] += angle_between(hit->eta, Vec3{0.5, 0.5, 0.5} - hit->p_iso);
                NormalStats stats;
                const Vec3 again = smoothed_normal(field, hit->p_iso, kernel, &stats);
                exact_counts = exact_counts && stats.gradient_evaluations == samples && again == hit->eta;
            }
        }
        mean_err[kn] /= static_cast<double>(std::max<std::size_t>(hits[kn], 1));
    }
    const double elapsed = seconds_since(t0);
    const double deg = 180.0 / std::numbers::pi;
    const bool pass = hits[0] >= kMinSurfaceHits && hits[1] >= kMinSurfaceHits && mean_err[1] < mean_err[0] &&
                      worst_unit <= kUnitTol && exact_counts && elapsed < kNormalsBudgetS;
    return {pass, fmt("%zu hits, mean angular err N=1 %.4f deg, N=3 %.4f deg, max | |eta|-1 | %.2g (tol %.0e), "
                      "samples per normal exactly N^3: %s, %.2f s (budget %.0f s)",
                      hits[1], mean_err[0] * deg, mean_err[1] * deg, worst_unit, kUnitTol,
                      exact_counts ? "yes" : "no", elapsed, kNormalsBudgetS)};
}

Outcome carving_oracle()
{
    const auto t0 = Clock::now();
    const LabeledVolume cube = solid_cube(kCarveGrid);
    std::mt19937_64 rng(64);
    std::uniform_real_distribution<double> up(-8.0, kCarveGrid + 8.0), ur(0.3, 12.0);
    int matched = 0;
    for (int n = 0; n < kCarveCases; ++n) {
        const Vec3 tip{up(rng), up(rng), up(rng)};
        const double r = ur(rng);
        matched += intersect_voxels(cube, tip, r) == brute_force(cube, tip, r) ? 1 : 0;
    }

    SessionConfig cfg;
    cfg.burrs = {Burr{3.0, BurrTip::Cutting, 5000.0}};
    cfg.initial_burr = 0;
    Session session(cube, cfg);
    auto sink = std::make_shared<VectorSink>();
    session.add_sink(sink);
    Trajectory traj;
    traj.keyframes = {{0.0, Vec3{30.0, 34.0, 70.0}, Quat{}, 1.0, 0}, {0.25, Vec3{34.0, 30.0, 20.0}, Quat{}, 1.0, 0}};
    session.run_script(traj);
    std::set<VoxelIndex> oracle;
    const auto steps = std::llround(traj.duration() * cfg.tick_rate_hz);
    for (long long n = 1; n <= steps; ++n) {
        for (const VoxelIndex& v : brute_force(cube, traj.sample(n / cfg.tick_rate_hz).tip_position, 3.0)) {
            oracle.insert(v);
        }
    }
    std::set<VoxelIndex> removed;
    std::size_t removal_events = 0;
    for (const auto& e : sink->events) {
        if (const auto* r = std::get_if<VoxelRemovedEvent>(&e)) {
            removed.insert(r->index);
            ++removal_events;
        }
    }
    const double elapsed = seconds_since(t0);
    const bool sweep_ok = removed == oracle && removal_events == oracle.size() && !oracle.empty();
    return {matched == kCarveCases && sweep_ok && elapsed < kCarveBudgetS,
            fmt("%d/%d intersect cases equal brute force on %u^3; plunge removed %zu voxels, oracle %zu, equal: %s; "
                "%.2f s (budget %.0f s)",
                matched, kCarveCases, kCarveGrid, removed.size(), oracle.size(), sweep_ok ? "yes" : "no", elapsed,
                kCarveBudgetS)};
}

Trajectory minute_script()
{
    Trajectory t;
    t.mode = Interpolation::Linear;
    t.keyframes.push_back({0.0, Vec3{20.0, 20.0, 46.0}, Quat{}, 0.0, 4});
    const int segments = 30;
    for (int s = 1; s <= segments; ++s) {
        const double time = kReplaySeconds * s / segments;
        const double theta = 0.7 * s;
        const double depth = 24.0 - 0.4 * s;
        const double pedal = s % 7 == 3 ? 0.0 : 1.0;
        const std::uint32_t burr = s < 20 ? 4 : 2;
        const Quat q = normalized(Quat{1.0, 0.1 * std::sin(theta), 0.1 * std::cos(theta), 0.0});
        t.keyframes.push_back(
            {time, Vec3{20.0 + 9.0 * std::cos(theta), 20.0 + 9.0 * std::sin(theta), depth}, q, pedal, burr});
    }
    return t;
}

Outcome replay_identity()
{
    const auto t0 = Clock::now();
    TempDir tmp;
    const LabeledVolume initial = slab_with_nerve(40);
    Session session(initial, SessionConfig{});
    auto live = std::make_shared<VectorSink>();
    session.add_sink(live);
    RecordingMeta meta = session.recording_meta("P01");
    meta.wall_clock_start = "2026-01-01T00:00:00Z";
    session.add_sink(std::make_shared<AsyncSink>(
        std::make_shared<RecorderSink>(open_recording(tmp / "rec", meta, SessionConfig{}.batch_size)), 4096));
    const SessionSummary s = session.run_script(minute_script());
    session.close();

    RecordingReader reader(tmp / "rec");
    const std::uint64_t replayed = grid_digest(replay_to_grid(initial, reader));
    const std::string live_report = render_json(compute_report(meta, live->events));
    const std::string replay_report = render_json(report(tmp / "rec"));
    const bool pass = s.steps == static_cast<std::uint64_t>(kReplaySeconds * 1000.0) && replayed == s.final_digest &&
                      reader.manifest().final_digest == s.final_digest && live_report == replay_report &&
                      s.removals > 0;
    return {pass, fmt("%llu ticks, %llu removals, %zu events; live digest %016llx, replayed %016llx; "
                      "reports byte-identical: %s (%zu bytes); %.2f s",
                      static_cast<unsigned long long>(s.steps), static_cast<unsigned long long>(s.removals),
                      live->events.size(), static_cast<unsigned long long>(s.final_digest),
                      static_cast<unsigned long long>(replayed), live_report == replay_report ? "yes" : "no",
                      live_report.size(), seconds_since(t0))};
}

Outcome recorder_format()
{
    const auto t0 = Clock::now();
    const GridGeometry grid{Dims{32, 32, 24}, Vec3{0.5, 0.5, 0.5}, Vec3{-8, -8, 0}};
    const auto events = mixed_events(kRecorderEvents, 2026, grid);
    auto write = [&](const std::filesystem::path& dir, std::uint64_t batch) {
        auto rec = open_recording(dir, fixture_meta(grid), batch);
        for (const auto& ev : events) {
            rec.append(ev);
        }
        return rec.close();
    };

    TempDir main;
    const Manifest m = write(main / "rec", kRecorderBatch);
    const bool lossless = read_recording(main / "rec").events == events;
    const double fraction =
        static_cast<double>(m.container_bytes()) / static_cast<double>(naive_log_size(events));

    bool partition = true;
    for (std::uint64_t bs : {1u, 10u, 1000u}) {
        TempDir tmp;
        const Manifest pm = write(tmp / "rec", bs);
        const std::size_t want = (events.size() + bs - 1) / bs;
        partition = partition && pm.batches.size() == want && pm.total_events == events.size();
        for (std::size_t b = 0; partition && b < pm.batches.size(); ++b) {
            const std::uint64_t expect = b + 1 < want ? bs : events.size() - bs * (want - 1);
            partition = pm.batches[b].events == expect && pm.batches[b].t_min == event_time(events[b * bs]);
        }
        partition = partition && read_recording(tmp / "rec").events == events;
    }

    int caught = 0;
    const int flips = 20;
    std::mt19937_64 rng(5);
    for (int n = 0; n < flips; ++n) {
        const auto& entry = m.batches[rng() % m.batches.size()];
        const auto path = main / "rec" / entry.file;
        auto bytes = read_file(path);
        const std::size_t off = rng() % bytes.size();
        const std::uint8_t orig = bytes[off];
        bytes[off] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        write_file(path, bytes);
        try {
            (void)read_recording(main / "rec");
        } catch (const Error& e) {
            caught += e.kind() == ErrorKind::Corruption ? 1 : 0;
        }
        bytes[off] = orig;
        write_file(path, bytes);
    }
    const bool pass = lossless && partition && caught == flips && fraction < kMaxCompressedFraction;
    return {pass, fmt("%zu events lossless: %s; partition exact for {1,10,1000}: %s; corruption caught %d/%d; "
                      "size %llu vs naive %zu bytes = %.4f (limit %.2f); %.2f s",
                      events.size(), lossless ? "yes" : "no", partition ? "yes" : "no", caught, flips,
                      static_cast<unsigned long long>(m.container_bytes()), naive_log_size(events), fraction,
                      kMaxCompressedFraction, seconds_since(t0))};
}

Outcome metrics_convergence()
{
    const auto t0 = Clock::now();
    const double rate = 1000.0;
    const double A = 5.0;
    double worst_acc = 0.0;
    double worst_jerk = 0.0;
    for (double w : {0.5, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0}) {
        KinematicsSeries s;
        s.dt = 1.0 / rate;
        const double seconds = std::max(2.0, 2.0 * 2.0 * std::numbers::pi / w);
        const auto n = static_cast<std::size_t>(std::llround(seconds * rate)) + 1;
        for (std::size_t i = 0; i < n; ++i) {
            s.positions.push_back(Vec3{A * std::sin(w * static_cast<double>(i) * s.dt), 0.0, 0.0});
        }
        const KinematicsMetrics m = kinematics_metrics(s);
        worst_acc = std::max(worst_acc, std::fabs(m.acceleration->max - A * w * w) / (A * w * w));
        worst_jerk = std::max(worst_jerk, std::fabs(m.jerk->max - A * w * w * w) / (A * w * w * w));
    }
    KinematicsSeries cv;
    cv.dt = 1.0 / rate;
    for (int i = 0; i < 5000; ++i) {
        cv.positions.push_back(Vec3{0.125 * i, -0.0625 * i, 0.25 * i + 3.0});
    }
    const KinematicsMetrics m = kinematics_metrics(cv);
    const double cv_residual = std::max(m.acceleration->max, m.jerk->max);
    const bool pass = worst_acc <= kMetricsRelTol && worst_jerk <= kMetricsRelTol && cv_residual <= kConstantVelocityTol;
    return {pass, fmt("sine at 1 kHz, omega 0.5..20: max accel rel err %.2e, max jerk rel err %.2e (tol %.0e); "
                      "constant velocity accel/jerk %.2g (tol %.0e); %.2f s",
                      worst_acc, worst_jerk, kMetricsRelTol, cv_residual, kConstantVelocityTol, seconds_since(t0))};
}

LabeledVolume random_labeled(Dims d, std::uint32_t seed)
{
    SegmentTable t;
    t.add(1, Segment{"Bone", Rgb{0.9, 0.85, 0.7}, false});
    t.add(2, Segment{"Dura", Rgb{0.2, 0.4, 0.9}, false});
    t.add(3, Segment{"FacialNerve", Rgb{1.0, 1.0, 0.0}, true});
    std::mt19937 rng(seed);
    std::vector<Label> labels(d.count());
    for (auto& l : labels) {
        l = static_cast<Label>(rng() % 4);
    }
    return LabeledVolume(GridGeometry{d, Vec3{0.5, 0.25, 1.5}, Vec3{-3.0, 4.0, 0.5}}, std::move(labels),
                         std::move(t));
}

Outcome nrrd_round_trip()
{
    const auto t0 = Clock::now();
    int combos = 0;
    int identical = 0;
    const LabeledVolume labels = random_labeled(Dims{17, 11, 7}, 3);
    for (NrrdType type : {NrrdType::UInt8, NrrdType::UInt16, NrrdType::Int16}) {
        for (NrrdEncoding enc : {NrrdEncoding::Raw, NrrdEncoding::Gzip}) {
            ++combos;
            const auto parsed = parse_nrrd(write_nrrd(labels, type, enc));
            identical += std::holds_alternative<LabeledVolume>(parsed) && std::get<LabeledVolume>(parsed) == labels;
        }
    }
    for (NrrdType type : {NrrdType::UInt8, NrrdType::UInt16, NrrdType::Int16, NrrdType::Float32}) {
        const double q = type == NrrdType::UInt8 ? 255.0 : type == NrrdType::UInt16 ? 65535.0
                                                      : type == NrrdType::Int16   ? 32767.0
                                                                                  : 1024.0;
        IntensityVolume iv;
        iv.geometry = GridGeometry{Dims{9, 6, 4}, Vec3{0.25, 0.5, 0.75}, Vec3{1, -2, 3}};
        std::mt19937 rng(11);
        for (std::size_t n = 0; n < iv.geometry.dims.count(); ++n) {
            iv.values.push_back(static_cast<double>(rng() % (static_cast<std::uint32_t>(q) + 1)) / q);
        }
        iv.values[0] = 0.0;
        iv.values[1] = 1.0;
        for (NrrdEncoding enc : {NrrdEncoding::Raw, NrrdEncoding::Gzip}) {
            ++combos;
            const auto parsed = parse_nrrd(write_nrrd(iv, type, enc));
            identical += std::holds_alternative<IntensityVolume>(parsed) &&
                         std::get<IntensityVolume>(parsed).geometry == iv.geometry &&
                         std::get<IntensityVolume>(parsed).values == iv.values;
        }
    }

    const auto seg = read_nrrd(std::string(BURRSIM_FIXTURE_DIR) + "/seg.nrrd");
    SegmentTable want;
    want.add(1, Segment{"Bone", Rgb{0.945098, 0.839216, 0.568627}, false});
    want.add(4, Segment{"FacialNerve", Rgb{1, 1, 0}, false});
    want.add(2, Segment{"Dura", Rgb{0.2, 0.4, 0.9}, false});
    const std::vector<Label> want_labels{0, 1, 1, 0, 1, 1, 1, 1, 0, 4, 4, 0, 2, 2, 0, 0, 1, 1, 4, 0, 0, 0, 0, 0};
    const bool seg_ok = std::holds_alternative<LabeledVolume>(seg) && std::get<LabeledVolume>(seg).segments() == want &&
                        std::ranges::equal(std::get<LabeledVolume>(seg).labels(), want_labels) &&
                        std::get<LabeledVolume>(seg).geometry() ==
                            GridGeometry{Dims{4, 3, 2}, Vec3{0.5, 0.5, 1.25}, Vec3{-10, 20.5, 3}};

    TempDir tmp;
    const LabeledVolume stack = random_labeled(Dims{23, 19, 6}, 8);
    export_image_stack(stack, tmp.path(), ImageFormat::Png);
    const bool png_ok = import_image_stack(tmp.path()) == stack;
    return {identical == combos && seg_ok && png_ok,
            fmt("%d/%d type/encoding combinations identical; seg fixture exact: %s; PNG stack identity: %s; %.2f s",
                identical, combos, seg_ok ? "yes" : "no", png_ok ? "yes" : "no", seconds_since(t0))};
}

TickStats measure_window(GatewayServer& server)
{
    server.reset_tick_stats();
    std::this_thread::sleep_for(std::chrono::duration<double>(kJitterWindowS));
    return server.tick_stats();
}

Outcome gateway_loopback()
{
    const auto t0 = Clock::now();
    const auto ticks = static_cast<std::uint64_t>(kGatewaySeconds * 1000.0);

    Session session(slab_with_nerve(32), SessionConfig{});
    GatewayOptions opts;
    opts.endpoint = "127.0.0.1:0";
    opts.state_rate_hz = kGatewayStateHz;
    opts.speed = kGatewaySpeed;
    opts.max_ticks = ticks;
    GatewayServer server(session, opts);
    server.start();
    Trajectory traj;
    traj.keyframes = {{0.0, Vec3{16, 16, 34}, Quat{}, 1.0, 4},
                      {4.0, Vec3{12, 16, 12}, Quat{}, 1.0, 4},
                      {7.0, Vec3{20, 18, 10}, Quat{}, 0.0, 2},
                      {kGatewaySeconds + 1.0, Vec3{16, 10, 11}, Quat{}, 1.0, 2}};
    const ControllerRun run = drive_controller(server.port(), traj, ticks, kGatewayStateHz, kInputsPerFrame);
    server.wait();
    const std::uint64_t server_digest = session.grid_digest();
    const auto applied = server.applied_input_seqs();
    server.stop();
    const bool digest_ok = run.mismatches == 0 && run.mirror_digest == server_digest &&
                           run.final_server_digest == server_digest && run.last_tick == ticks;
    const bool order_ok = !applied.empty() && std::is_sorted(applied.begin(), applied.end()) &&
                          std::adjacent_find(applied.begin(), applied.end()) == applied.end() && applied.size() < run.sent_seqs.size() &&
                          std::includes(run.sent_seqs.begin(), run.sent_seqs.end(), applied.begin(), applied.end());

    Session quiet(random_labeled(Dims{64, 64, 64}, 21), SessionConfig{});
    GatewayOptions qopts;
    qopts.endpoint = "127.0.0.1:0";
    qopts.speed = 1.0;
    GatewayServer paced(quiet, qopts);
    paced.start();
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    std::vector<double> base_sd, stall_sd, base_mean, stall_mean;
    for (int pair = 0; pair < kJitterPairs; ++pair) {
        const TickStats b = measure_window(paced);
        base_sd.push_back(b.stddev_s);
        base_mean.push_back(b.mean_s);
        RawSocket stalled(paced.port(), 2048);
        stalled.send_all(wire::encode(wire::Join{wire::Role::Spectator, 0}));
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
        const TickStats t = measure_window(paced);
        stall_sd.push_back(t.stddev_s);
        stall_mean.push_back(t.mean_s);
    }
    const GatewayCounters counters = paced.counters();
    paced.stop();
    const double base = median(base_sd);
    const double busy = median(stall_sd);
    const double limit = std::max(kJitterRatio * base, base + kJitterFloorS);
    const bool jitter_ok = busy <= limit &&
                           std::fabs(median(stall_mean) - median(base_mean)) <= kMeanIntervalTol * median(base_mean) &&
                           counters.slow_consumer_drops == 0;
    return {digest_ok && order_ok && jitter_ok,
            fmt("%zu frames, %zu verified, mirror %016llx vs server %016llx; %zu inputs applied in order from %zu "
                "sent: %s; median tick-interval stddev %.1f us baseline, %.1f us with stalled reader (limit %.1f us) "
                "over %d interleaved %.1f s windows; %.2f s",
                run.frames, run.verified, static_cast<unsigned long long>(run.mirror_digest),
                static_cast<unsigned long long>(server_digest), applied.size(), run.sent_seqs.size(),
                order_ok ? "yes" : "no", base * 1e6, busy * 1e6, limit * 1e6, kJitterPairs, kJitterWindowS,
                seconds_since(t0))};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"force-and-pitch closed form", force_and_pitch},
        {"smoothed normals on a sphere", smoothed_normals},
        {"carving oracle", carving_oracle},
        {"record/replay identity", replay_identity},
        {"recorder format", recorder_format},
        {"metrics convergence", metrics_convergence},
        {"nrrd and image stack round trip", nrrd_round_trip},
        {"gateway loopback", gateway_loopback},
    };
    int failed = 0;
    for (std::size_t n = 0; n < criteria.size(); ++n) {
        Outcome o;
        try {
            o = criteria[n].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", n + 1, criteria[n].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
