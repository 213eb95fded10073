#pragma once

#include "burrsim/core/bounded_queue.hpp"
#include "burrsim/drill/drill.hpp"
#include "burrsim/record/events.hpp"
#include "burrsim/record/recorder.hpp"
#include "burrsim/session/config.hpp"
#include "burrsim/session/trajectory.hpp"

#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace burrsim {

struct StepReport {
    std::uint64_t tick = 0;
    double t = 0.0;
    TickOutcome outcome;
    Pose drill;
    Pose camera;
    std::uint32_t burr_id = 0;
    bool burr_changed = false;
};

struct SessionSummary {
    std::uint64_t steps = 0;
    std::uint64_t removals = 0;
    double max_force = 0.0;
    // Ticks that raised at least one warning, and the distinct labels involved.
    std::uint64_t warning_ticks = 0;
    std::set<Label> warned_labels;
    double t_end = 0.0;
    std::uint64_t final_digest = 0;
};

class EventSink {
public:
    virtual ~EventSink() = default;
    virtual void consume(const EventRecord& ev) = 0;
    // Called once when the session closes, with its final grid digest.
    virtual void finish(std::uint64_t /*final_digest*/) {}
};

class RecorderSink : public EventSink {
public:
    explicit RecorderSink(Recorder recorder) : recorder_(std::move(recorder)) {}
    void consume(const EventRecord& ev) override { recorder_.append(ev); }
    void finish(std::uint64_t final_digest) override;
    [[nodiscard]] const Manifest& manifest() const noexcept { return manifest_; }

private:
    Recorder recorder_;
    Manifest manifest_;
};

class VectorSink : public EventSink {
public:
    void consume(const EventRecord& ev) override { events.push_back(ev); }
    std::vector<EventRecord> events;
};

// Hands events to `inner` on a dedicated thread through a bounded queue. A full queue blocks the
// producer. Errors raised by the consumer resurface on the next consume() or finish().
class AsyncSink : public EventSink {
public:
    AsyncSink(std::shared_ptr<EventSink> inner, std::size_t capacity);
    ~AsyncSink() override;

    void consume(const EventRecord& ev) override;
    void finish(std::uint64_t final_digest) override;

private:
    void rethrow_pending();

    std::shared_ptr<EventSink> inner_;
    BoundedQueue<EventRecord> queue_;
    std::thread worker_;
    std::mutex error_mutex_;
    std::exception_ptr error_;
    bool finished_ = false;
};

class Session {
public:
    // Setup error (Validation) on an empty volume or an invalid config.
    Session(LabeledVolume volume, SessionConfig config);

    void add_sink(std::shared_ptr<EventSink> sink);
    void set_camera(const Pose& camera) noexcept { camera_ = camera; }

    // State error once closed.
    StepReport step(const DrillInput& input);
    // Validation error for an invalid trajectory.
    SessionSummary run_script(const Trajectory& traj);
    // Finishes every sink.
    void close();

    [[nodiscard]] bool is_open() const noexcept { return open_; }
    [[nodiscard]] std::uint64_t tick_count() const noexcept { return tick_; }
    [[nodiscard]] double time() const noexcept { return static_cast<double>(tick_) / config_.tick_rate_hz; }
    [[nodiscard]] const LabeledVolume& volume() const noexcept { return volume_; }
    [[nodiscard]] const SessionConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::uint32_t burr_id() const noexcept { return burr_id_; }
    [[nodiscard]] std::uint64_t removed_count() const noexcept { return removed_; }
    [[nodiscard]] std::uint64_t initial_digest() const noexcept { return initial_digest_; }
    [[nodiscard]] std::uint64_t grid_digest() const noexcept { return burrsim::grid_digest(volume_); }
    // Grid, damage field, tick and burr.
    [[nodiscard]] std::uint64_t state_digest() const noexcept;

    [[nodiscard]] RecordingMeta recording_meta(const std::string& participant_id) const;

private:
    void emit(const EventRecord& ev);
    static bool crosses(std::uint64_t tick, double rate, double tick_rate) noexcept;

    LabeledVolume volume_;
    SessionConfig config_;
    DrillModel model_;
    DamageField damage_;
    std::vector<std::shared_ptr<EventSink>> sinks_;
    Pose camera_;
    std::uint64_t tick_ = 0;
    std::uint32_t burr_id_ = 0;
    std::uint64_t removed_ = 0;
    std::uint64_t initial_digest_ = 0;
    bool open_ = true;
};

} // namespace burrsim
