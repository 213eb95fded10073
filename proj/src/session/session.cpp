#include "burrsim/session/session.hpp"

#include "burrsim/core/errors.hpp"
#include "burrsim/core/hash.hpp"

#include <cmath>

namespace burrsim {

void RecorderSink::finish(std::uint64_t final_digest)
{
    if (recorder_.is_open()) {
        recorder_.set_final_digest(final_digest);
        manifest_ = recorder_.close();
    }
}

AsyncSink::AsyncSink(std::shared_ptr<EventSink> inner, std::size_t capacity)
    : inner_(std::move(inner)), queue_(capacity)
{
    require(inner_ != nullptr, "AsyncSink needs a consumer");
    worker_ = std::thread([this] {
        while (auto ev = queue_.pop()) {
            try {
                inner_->consume(*ev);
            } catch (...) {
                std::lock_guard lock(error_mutex_);
                if (!error_) {
                    error_ = std::current_exception();
                }
            }
        }
    });
}

AsyncSink::~AsyncSink()
{
    queue_.close();
    if (worker_.joinable()) {
        worker_.join();
    }
}

void AsyncSink::rethrow_pending()
{
    std::exception_ptr e;
    {
        std::lock_guard lock(error_mutex_);
        e = std::exchange(error_, nullptr);
    }
    if (e) {
        std::rethrow_exception(e);
    }
}

void AsyncSink::consume(const EventRecord& ev)
{
    rethrow_pending();
    if (!queue_.push(ev)) {
        fail(ErrorKind::State, "event sink already finished");
    }
}

void AsyncSink::finish(std::uint64_t final_digest)
{
    if (finished_) {
        return;
    }
    finished_ = true;
    queue_.close();
    worker_.join();
    rethrow_pending();
    inner_->finish(final_digest);
}

Session::Session(LabeledVolume volume, SessionConfig config)
    : volume_(std::move(volume)), config_(std::move(config))
{
    if (volume_.dims().count() == 0 || volume_.count_nonzero() == 0) {
        fail(ErrorKind::Validation, "session needs a non-empty volume");
    }
    config_.validate();
    model_ = config_.drill_model();
    for (const auto& [label, seg] : volume_.segments().entries()) {
        if (seg.sensitive) {
            model_.sensitive.insert(label);
        }
    }
    damage_ = DamageField(volume_.dims());
    burr_id_ = config_.initial_burr;
    initial_digest_ = burrsim::grid_digest(volume_);
}

void Session::add_sink(std::shared_ptr<EventSink> sink)
{
    require(sink != nullptr, "null event sink");
    sinks_.push_back(std::move(sink));
}

void Session::emit(const EventRecord& ev)
{
    for (auto& sink : sinks_) {
        sink->consume(ev);
    }
}

bool Session::crosses(std::uint64_t tick, double rate, double tick_rate) noexcept
{
    if (rate <= 0.0 || rate >= tick_rate) {
        return true;
    }
    const double now = std::floor(static_cast<double>(tick) * rate / tick_rate);
    const double before = std::floor(static_cast<double>(tick - 1) * rate / tick_rate);
    return now > before;
}

StepReport Session::step(const DrillInput& raw)
{
    if (!open_) {
        fail(ErrorKind::State, "session is closed");
    }
    const DrillInput input = sanitize(raw);
    if (input.burr_id >= config_.burrs.size()) {
        fail(ErrorKind::Validation, "burr id " + std::to_string(input.burr_id) + " not in catalog");
    }
    ++tick_;
    const double t = time();
    const double dt = 1.0 / config_.tick_rate_hz;

    StepReport report;
    report.tick = tick_;
    report.t = t;
    report.drill = {input.tip_position, input.tip_orientation};
    report.camera = camera_;

    if (input.burr_id != burr_id_) {
        burr_id_ = input.burr_id;
        report.burr_changed = true;
        const Burr& b = config_.burrs[burr_id_];
        emit(BurrChangeEvent{t, b.radius_mm, b.tip});
    }
    report.burr_id = burr_id_;

    report.outcome = apply_drill_tick(volume_, damage_, input, config_.burrs[burr_id_], dt, t, model_);
    removed_ += report.outcome.removed.size();

    for (const RemovedVoxel& rv : report.outcome.removed) {
        VoxelRemovedEvent ev{t, rv.index, rv.label, {}};
        const Segment* seg = volume_.segments().find(rv.label);
        const Rgb c = seg ? seg->color : kDefaultSegmentColor;
        ev.color = {static_cast<float>(c.r), static_cast<float>(c.g), static_cast<float>(c.b)};
        emit(ev);
    }
    if (crosses(tick_, config_.force_sample_rate_hz, config_.tick_rate_hz)) {
        emit(ForceSampleEvent{t, report.outcome.F_haptic});
    }
    if (crosses(tick_, config_.kinematics_rate_hz, config_.tick_rate_hz)) {
        emit(KinematicsEvent{t, report.drill, camera_});
    }
    return report;
}

SessionSummary Session::run_script(const Trajectory& traj)
{
    traj.validate(config_.burrs.size());
    set_camera(traj.camera);
    SessionSummary s;
    const auto steps = static_cast<std::uint64_t>(std::llround(traj.duration() * config_.tick_rate_hz));
    const std::uint64_t start = tick_;
    const std::uint64_t removed_before = removed_;
    for (std::uint64_t n = 1; n <= steps; ++n) {
        const double local_t = static_cast<double>(n) / config_.tick_rate_hz;
        const StepReport r = step(traj.sample(local_t));
        s.max_force = std::fmax(s.max_force, norm(r.outcome.F_collision));
        if (!r.outcome.warnings.empty()) {
            ++s.warning_ticks;
            for (const Warning& w : r.outcome.warnings) {
                s.warned_labels.insert(w.label);
            }
        }
    }
    s.steps = tick_ - start;
    s.removals = removed_ - removed_before;
    s.t_end = time();
    s.final_digest = grid_digest();
    return s;
}

void Session::close()
{
    if (!open_) {
        return;
    }
    open_ = false;
    std::exception_ptr first;
    for (auto& sink : sinks_) {
        try {
            sink->finish(grid_digest());
        } catch (...) {
            if (!first) {
                first = std::current_exception();
            }
        }
    }
    if (first) {
        std::rethrow_exception(first);
    }
}

std::uint64_t Session::state_digest() const noexcept
{
    std::uint64_t h = kFnvOffset;
    fnv_value(h, grid_digest());
    fnv_value(h, tick_);
    fnv_value(h, burr_id_);
    const auto& d = damage_.values();
    fnv_bytes(h, d.data(), d.size() * sizeof(float));
    return h;
}

RecordingMeta Session::recording_meta(const std::string& participant_id) const
{
    RecordingMeta meta;
    meta.anatomy_digest = initial_digest_;
    meta.participant_id = participant_id;
    meta.config = to_json(config_);
    meta.wall_clock_start = utc_now_iso8601();
    meta.tick_rate_hz = config_.tick_rate_hz;
    meta.geometry = volume_.geometry();
    meta.segments = volume_.segments();
    return meta;
}

} // namespace burrsim
