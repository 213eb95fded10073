#include "burrsim/record/recorder.hpp"

#include "burrsim/core/compress.hpp"
#include "burrsim/core/errors.hpp"
#include "burrsim/record/fvr_codec.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace burrsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string crc_hex(std::uint32_t c)
{
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", c);
    return buf;
}

std::uint32_t parse_crc_hex(const std::string& s)
{
    if (s.size() != 8) {
        fail(ErrorKind::Parse, "bad crc32 '" + s + "'");
    }
    return static_cast<std::uint32_t>(std::stoul(s, nullptr, 16));
}

void write_text_atomically(const fs::path& path, const std::string& text)
{
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) {
            fail(ErrorKind::Io, "cannot write " + tmp.string());
        }
        out << text;
        out.flush();
        if (!out) {
            fail(ErrorKind::Io, "write failed on " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fail(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
    }
}

} // namespace

std::uint64_t Manifest::container_bytes() const noexcept
{
    std::uint64_t n = 0;
    for (const auto& b : batches) {
        n += b.bytes;
    }
    return n;
}

std::string batch_file_name(std::uint32_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "batch_%03u.fvr", index);
    return buf;
}

json to_json(const Manifest& m)
{
    json batches = json::array();
    for (const auto& b : m.batches) {
        batches.push_back({{"file", b.file},
                           {"index", b.index},
                           {"events", b.events},
                           {"t_min", b.t_min},
                           {"t_max", b.t_max},
                           {"crc32", crc_hex(b.crc32)},
                           {"bytes", b.bytes}});
    }
    json j = {{"format", "FVR1"},
              {"schema_version", kSchemaVersion},
              {"batch_size", m.batch_size},
              {"total_events", m.total_events},
              {"batches", batches},
              {"meta", to_json(m.meta)}};
    if (m.final_digest) {
        j["final_digest"] = digest_hex(*m.final_digest);
    }
    return j;
}

Manifest manifest_from_json(const json& j)
{
    Manifest m;
    try {
        if (j.at("format").get<std::string>() != "FVR1") {
            fail(ErrorKind::Unsupported, "manifest format is not FVR1");
        }
        m.batch_size = j.at("batch_size").get<std::uint64_t>();
        m.total_events = j.at("total_events").get<std::uint64_t>();
        for (const auto& b : j.at("batches")) {
            BatchEntry e;
            e.file = b.at("file").get<std::string>();
            e.index = b.at("index").get<std::uint32_t>();
            e.events = b.at("events").get<std::uint64_t>();
            e.t_min = b.at("t_min").get<double>();
            e.t_max = b.at("t_max").get<double>();
            e.crc32 = parse_crc_hex(b.at("crc32").get<std::string>());
            e.bytes = b.at("bytes").get<std::uint64_t>();
            if (e.file.find('/') != std::string::npos || e.file.find("..") != std::string::npos) {
                fail(ErrorKind::Parse, "manifest batch file name '" + e.file + "' is not a plain file name");
            }
            m.batches.push_back(std::move(e));
        }
        m.meta = meta_from_json(j.at("meta"));
        if (j.contains("final_digest")) {
            m.final_digest = parse_digest_hex(j.at("final_digest").get<std::string>());
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("manifest: ") + e.what());
    }
    return m;
}

Manifest read_manifest(const fs::path& dir)
{
    const fs::path path = dir / kManifestName;
    if (!fs::exists(path)) {
        if (fs::exists(dir / kPartialManifestName)) {
            fail(ErrorKind::Incomplete, "recording in " + dir.string() + " was not closed cleanly (only " +
                                            kPartialManifestName + " present)");
        }
        fail(ErrorKind::Incomplete, "no manifest in " + dir.string());
    }
    std::ifstream in(path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::Corruption, path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

Recorder::Recorder(fs::path dir, RecordingMeta meta, std::uint64_t batch_size) : dir_(std::move(dir))
{
    require(batch_size >= 1, "recording batch size must be >= 1");
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
        fail(ErrorKind::Io, "cannot create recording directory " + dir_.string());
    }
    if (fs::exists(dir_ / kManifestName)) {
        fail(ErrorKind::Io, dir_.string() + " already holds a recording");
    }
    const fs::path probe = dir_ / ".write_probe";
    {
        std::ofstream p(probe);
        if (!p) {
            fail(ErrorKind::Io, "recording directory " + dir_.string() + " is not writable");
        }
    }
    fs::remove(probe, ec);

    manifest_.meta = std::move(meta);
    manifest_.batch_size = batch_size;
    meta_text_ = to_json(manifest_.meta).dump();
    pending_.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(batch_size, 1u << 16)));
    open_ = true;
}

Recorder::Recorder(Recorder&& other) noexcept
    : dir_(std::move(other.dir_)),
      manifest_(std::move(other.manifest_)),
      meta_text_(std::move(other.meta_text_)),
      pending_(std::move(other.pending_)),
      last_t_(other.last_t_),
      appended_(other.appended_),
      open_(other.open_)
{
    other.open_ = false;
}

Recorder::~Recorder()
{
    if (open_) {
        try {
            close();
        } catch (...) {
            write_partial_manifest();
        }
    }
}

void Recorder::append(EventRecord ev)
{
    if (!open_) {
        fail(ErrorKind::State, "append on a closed recorder");
    }
    const double t = event_time(ev);
    if (!std::isfinite(t) || t < 0.0) {
        fail(ErrorKind::Validation, "event time must be finite and non-negative");
    }
    if (last_t_ && t < *last_t_) {
        fail(ErrorKind::Ordering, "event time " + std::to_string(t) + " precedes last appended time " +
                                      std::to_string(*last_t_));
    }
    if (const auto* v = std::get_if<VoxelRemovedEvent>(&ev)) {
        if (!manifest_.meta.geometry.in_bounds(v->index)) {
            fail(ErrorKind::Validation, "removed voxel index lies outside the recorded volume");
        }
    }
    last_t_ = t;
    pending_.push_back(std::move(ev));
    ++appended_;
    if (pending_.size() >= manifest_.batch_size) {
        flush_batch();
    }
}

void Recorder::flush_batch()
{
    if (pending_.empty()) {
        return;
    }
    const auto index = static_cast<std::uint32_t>(manifest_.batches.size());
    const auto bytes = fvr::encode_batch(index, meta_text_, pending_);
    BatchEntry entry;
    entry.file = batch_file_name(index);
    entry.index = index;
    entry.events = pending_.size();
    entry.t_min = event_time(pending_.front());
    entry.t_max = event_time(pending_.back());
    entry.crc32 = crc32(bytes);
    entry.bytes = bytes.size();
    try {
        write_file(dir_ / entry.file, bytes);
    } catch (const Error&) {
        write_partial_manifest();
        throw;
    }
    manifest_.batches.push_back(std::move(entry));
    manifest_.total_events += pending_.size();
    pending_.clear();
}

void Recorder::write_partial_manifest() noexcept
{
    try {
        json j = to_json(manifest_);
        j["complete"] = false;
        j["note"] = "partial manifest: lists only batches written before an I/O failure";
        write_text_atomically(dir_ / kPartialManifestName, j.dump(2));
    } catch (...) {
    }
}

Manifest Recorder::close()
{
    if (!open_) {
        fail(ErrorKind::State, "recorder already closed");
    }
    open_ = false;
    try {
        flush_batch();
        write_text_atomically(dir_ / kManifestName, to_json(manifest_).dump(2) + "\n");
    } catch (const Error& e) {
        write_partial_manifest();
        fail(ErrorKind::Io, std::string(e.what()) + " (partial manifest written to " + kPartialManifestName + ")");
    }
    return manifest_;
}

RecordingReader::RecordingReader(fs::path dir) : dir_(std::move(dir)), manifest_(read_manifest(dir_))
{
    std::uint64_t sum = 0;
    for (const auto& b : manifest_.batches) {
        const fs::path p = dir_ / b.file;
        if (!fs::exists(p)) {
            fail(ErrorKind::Incomplete, "batch file " + b.file + " listed in the manifest is missing");
        }
        sum += b.events;
    }
    if (sum != manifest_.total_events) {
        fail(ErrorKind::Corruption, "manifest batch counts sum to " + std::to_string(sum) + ", total says " +
                                        std::to_string(manifest_.total_events));
    }
    for (const auto& b : manifest_.batches) {
        const fs::path p = dir_ / b.file;
        if (crc32_file(p) != b.crc32) {
            fail(ErrorKind::Corruption, "checksum mismatch in " + b.file);
        }
    }
}

void RecordingReader::load_batch(std::size_t index)
{
    const BatchEntry& b = manifest_.batches[index];
    buffer_.clear();
    buffer_.shrink_to_fit();
    const auto bytes = read_file(dir_ / b.file);
    if (crc32(bytes) != b.crc32) {
        fail(ErrorKind::Corruption, "checksum mismatch in " + b.file);
    }
    auto decoded = fvr::decode_batch(bytes, b.file);
    if (decoded.events.size() != b.events || decoded.batch_index != b.index) {
        fail(ErrorKind::Corruption, b.file + " disagrees with the manifest");
    }
    buffer_ = std::move(decoded.events);
    cursor_ = 0;
    peak_ = std::max(peak_, buffer_.size());
}

std::optional<EventRecord> RecordingReader::next()
{
    while (cursor_ >= buffer_.size()) {
        if (next_batch_ >= manifest_.batches.size()) {
            buffer_.clear();
            return std::nullopt;
        }
        load_batch(next_batch_++);
    }
    return std::move(buffer_[cursor_++]);
}

Recording read_recording(const fs::path& dir)
{
    RecordingReader reader(dir);
    Recording rec;
    rec.meta = reader.meta();
    rec.events.reserve(static_cast<std::size_t>(reader.manifest().total_events));
    while (auto ev = reader.next()) {
        rec.events.push_back(std::move(*ev));
    }
    return rec;
}

namespace {

void check_anatomy(const LabeledVolume& vol, const RecordingMeta& meta)
{
    const std::uint64_t d = grid_digest(vol);
    if (d != meta.anatomy_digest) {
        fail(ErrorKind::WrongAnatomy, "volume digest " + digest_hex(d) + " does not match recording anatomy digest " +
                                          digest_hex(meta.anatomy_digest));
    }
}

void apply_removal(LabeledVolume& vol, const VoxelRemovedEvent& ev)
{
    if (!vol.geometry().in_bounds(ev.index)) {
        fail(ErrorKind::Corruption, "replayed voxel index out of bounds");
    }
    if (vol.at(ev.index) != ev.label) {
        fail(ErrorKind::Corruption, "replayed removal of label " + std::to_string(ev.label) +
                                        " but the voxel holds label " + std::to_string(vol.at(ev.index)));
    }
    vol.clear(ev.index);
}

} // namespace

LabeledVolume replay_to_grid(LabeledVolume initial, const RecordingMeta& meta, const std::vector<EventRecord>& events,
                             std::size_t max_events)
{
    check_anatomy(initial, meta);
    const std::size_t n = std::min(max_events, events.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (const auto* v = std::get_if<VoxelRemovedEvent>(&events[i])) {
            apply_removal(initial, *v);
        }
    }
    return initial;
}

LabeledVolume replay_to_grid(LabeledVolume initial, RecordingReader& reader, std::size_t max_events)
{
    check_anatomy(initial, reader.meta());
    for (std::size_t i = 0; i < max_events; ++i) {
        auto ev = reader.next();
        if (!ev) {
            break;
        }
        if (const auto* v = std::get_if<VoxelRemovedEvent>(&*ev)) {
            apply_removal(initial, *v);
        }
    }
    return initial;
}

} // namespace burrsim
