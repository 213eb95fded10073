#pragma once

#include "burrsim/record/events.hpp"
#include "burrsim/record/meta.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace burrsim {

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kPartialManifestName = "manifest.partial.json";

struct BatchEntry {
    std::string file;
    std::uint32_t index = 0;
    std::uint64_t events = 0;
    double t_min = 0.0;
    double t_max = 0.0;
    std::uint32_t crc32 = 0;
    std::uint64_t bytes = 0;

    friend bool operator==(const BatchEntry&, const BatchEntry&) = default;
};

struct Manifest {
    RecordingMeta meta;
    std::uint64_t batch_size = 0;
    std::uint64_t total_events = 0;
    std::vector<BatchEntry> batches;
    // Grid digest of the live session when the recording was closed.
    std::optional<std::uint64_t> final_digest;

    [[nodiscard]] std::uint64_t container_bytes() const noexcept;
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
Manifest read_manifest(const std::filesystem::path& dir);

std::string batch_file_name(std::uint32_t index);

// Append-only, batch-split writer. One batch is buffered in memory and written as a single
// FVR1 file when it reaches `batch_size` events.
class Recorder {
public:
    // Throws Io when `dir` cannot be created or written, Contract when batch_size == 0.
    Recorder(std::filesystem::path dir, RecordingMeta meta, std::uint64_t batch_size);
    ~Recorder();

    Recorder(const Recorder&) = delete;
    Recorder& operator=(const Recorder&) = delete;
    Recorder(Recorder&& other) noexcept;
    Recorder& operator=(Recorder&&) = delete;

    // Ordering error when ev.t precedes the last appended time; State error once closed.
    void append(EventRecord ev);
    // Flushes the open batch and writes the manifest. A zero-event recording has zero batches.
    Manifest close();
    void set_final_digest(std::uint64_t digest) noexcept { manifest_.final_digest = digest; }

    [[nodiscard]] bool is_open() const noexcept { return open_; }
    [[nodiscard]] std::uint64_t appended() const noexcept { return appended_; }
    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    void flush_batch();
    void write_partial_manifest() noexcept;

    std::filesystem::path dir_;
    Manifest manifest_;
    std::string meta_text_;
    std::vector<EventRecord> pending_;
    std::optional<double> last_t_;
    std::uint64_t appended_ = 0;
    bool open_ = false;
};

inline Recorder open_recording(std::filesystem::path dir, RecordingMeta meta, std::uint64_t batch_size)
{
    return Recorder(std::move(dir), std::move(meta), batch_size);
}

// Streams events batch by batch. Construction checks that every listed batch exists
// (Incomplete) and that each file's CRC matches the manifest (Corruption, naming the file).
class RecordingReader {
public:
    explicit RecordingReader(std::filesystem::path dir);

    [[nodiscard]] const RecordingMeta& meta() const noexcept { return manifest_.meta; }
    [[nodiscard]] const Manifest& manifest() const noexcept { return manifest_; }

    std::optional<EventRecord> next();

    // Largest number of decoded events held at once.
    [[nodiscard]] std::size_t peak_buffered_events() const noexcept { return peak_; }

private:
    void load_batch(std::size_t index);

    std::filesystem::path dir_;
    Manifest manifest_;
    std::size_t next_batch_ = 0;
    std::vector<EventRecord> buffer_;
    std::size_t cursor_ = 0;
    std::size_t peak_ = 0;
};

struct Recording {
    RecordingMeta meta;
    std::vector<EventRecord> events;
};

Recording read_recording(const std::filesystem::path& dir);

// Applies VoxelRemoved events in order (at most `max_events` events of any kind are consumed).
// WrongAnatomy when `meta.anatomy_digest` differs from the initial volume's digest.
LabeledVolume replay_to_grid(LabeledVolume initial, const RecordingMeta& meta, const std::vector<EventRecord>& events,
                             std::size_t max_events = static_cast<std::size_t>(-1));
LabeledVolume replay_to_grid(LabeledVolume initial, RecordingReader& reader,
                             std::size_t max_events = static_cast<std::size_t>(-1));

} // namespace burrsim
