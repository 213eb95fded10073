#include "cli.hpp"

#include "burrsim/core/compress.hpp"
#include "burrsim/core/text.hpp"
#include "burrsim/gateway/server.hpp"
#include "burrsim/iso/render.hpp"
#include "burrsim/metrics/metrics.hpp"
#include "burrsim/record/hdf5_export.hpp"
#include "burrsim/record/recorder.hpp"
#include "burrsim/session/session.hpp"
#include "burrsim/volume/image_stack.hpp"
#include "burrsim/volume/nrrd.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace burrsim::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kAnatomyFile = "anatomy.nrrd";

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted.store(true); }

struct DigestMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

LabeledVolume load_volume(const fs::path& path)
{
    if (fs::is_directory(path)) {
        return import_image_stack(path);
    }
    ParsedVolume parsed = read_nrrd(path);
    if (auto* labeled = std::get_if<LabeledVolume>(&parsed)) {
        return std::move(*labeled);
    }
    return threshold_to_labels(std::get<IntensityVolume>(parsed));
}

std::vector<Label> parse_label_list(const std::string& list)
{
    std::vector<Label> out;
    std::string item;
    for (std::size_t pos = 0; pos <= list.size(); ++pos) {
        if (pos == list.size() || list[pos] == ',') {
            if (!item.empty()) {
                auto v = text::parse_int(text::trim(item));
                if (!v || *v < 1 || *v > 0xFFFF) {
                    fail(ErrorKind::Usage, "bad label '" + item + "'");
                }
                out.push_back(static_cast<Label>(*v));
            }
            item.clear();
        } else {
            item += list[pos];
        }
    }
    return out;
}

NrrdType parse_type(const std::string& s)
{
    if (s == "uint8") {
        return NrrdType::UInt8;
    }
    if (s == "uint16") {
        return NrrdType::UInt16;
    }
    if (s == "int16") {
        return NrrdType::Int16;
    }
    fail(ErrorKind::Usage, "label volumes are written as uint8, uint16 or int16, not '" + s + "'");
}

void print_volume_summary(std::ostream& out, const LabeledVolume& vol)
{
    const auto& g = vol.geometry();
    out << "dims " << g.dims.x << "x" << g.dims.y << "x" << g.dims.z << "\n";
    out << "spacing " << text::format_double(g.spacing.x) << "," << text::format_double(g.spacing.y) << ","
        << text::format_double(g.spacing.z) << " mm\n";
    const auto hist = vol.label_histogram();
    for (const auto& [label, seg] : vol.segments().entries()) {
        auto it = hist.find(label);
        out << "segment " << label << " " << seg.name << (seg.sensitive ? " (sensitive)" : "") << " voxels "
            << (it == hist.end() ? 0 : it->second) << "\n";
    }
    out << "digest " << digest_hex(grid_digest(vol)) << "\n";
}

struct Globals {
    std::string config_path;
    std::string fixed_clock;
    std::uint64_t seed = 0;
};

SessionConfig load_session_config(const Globals& g)
{
    return g.config_path.empty() ? SessionConfig{} : load_config(g.config_path);
}

void write_volume(const fs::path& path, const LabeledVolume& vol, NrrdType type = NrrdType::UInt16,
                  NrrdEncoding encoding = NrrdEncoding::Gzip)
{
    write_file(path, write_nrrd(vol, type, encoding));
}

} // namespace

int exit_code(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::Usage:
        return kUsage;
    case ErrorKind::Parse:
    case ErrorKind::Conflict:
        return kParse;
    case ErrorKind::Unsupported:
        return kUnsupported;
    case ErrorKind::Truncated:
        return kTruncated;
    case ErrorKind::Io:
        return kIo;
    case ErrorKind::Corruption:
    case ErrorKind::Framing:
        return kCorruption;
    case ErrorKind::Incomplete:
        return kIncomplete;
    case ErrorKind::InsufficientData:
        return kInsufficientData;
    case ErrorKind::WrongAnatomy:
        return kDigestMismatch;
    case ErrorKind::Validation:
    case ErrorKind::Ordering:
        return kValidation;
    case ErrorKind::State:
        return kState;
    case ErrorKind::Network:
        return kNetwork;
    case ErrorKind::Contract:
    case ErrorKind::DegenerateNormal:
        return kGeneric;
    }
    return kGeneric;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"burrsim: volumetric drilling simulation toolkit", "burrsim"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Session config JSON")->envname("BURRSIM_CONFIG");
    app.add_option("--fixed-clock", g.fixed_clock, "Pin the recorded wall-clock start (ISO-8601)")
        ->envname("BURRSIM_FIXED_CLOCK");
    app.add_option("--seed", g.seed, "Seed for generated identifiers")->envname("BURRSIM_SEED");

    // import
    std::string imp_in, imp_out, imp_sensitive;
    auto* imp = app.add_subcommand("import", "Validate a NRRD / seg.nrrd and cache it as a label volume");
    imp->add_option("input", imp_in, "Input .nrrd or .seg.nrrd")->required();
    imp->add_option("-o,--output", imp_out, "Output label volume (.nrrd)")->required();
    imp->add_option("--sensitive", imp_sensitive, "Comma-separated labels to flag as sensitive");

    // convert
    std::string cv_in, cv_stack, cv_out, cv_format = "png", cv_type = "uint16", cv_encoding = "gzip";
    bool cv_from_stack = false;
    auto* cv = app.add_subcommand("convert", "Convert between label volume and image stack forms");
    cv->add_option("input", cv_in, "Input volume (or stack directory with --from-stack)")->required();
    cv->add_option("--to-stack", cv_stack, "Write an image stack into this directory");
    cv->add_flag("--from-stack", cv_from_stack, "Input is an image stack directory");
    cv->add_option("--format", cv_format, "Stack image format")->check(CLI::IsMember({"png", "jpeg"}));
    cv->add_option("-o,--output", cv_out, "Output .nrrd");
    cv->add_option("--type", cv_type, "NRRD sample type")->check(CLI::IsMember({"uint8", "uint16", "int16"}));
    cv->add_option("--encoding", cv_encoding, "NRRD encoding")->check(CLI::IsMember({"raw", "gzip"}));

    // simulate
    std::string sim_vol, sim_script, sim_record, sim_participant = "anonymous", sim_report = "none";
    std::uint64_t sim_batch = 0;
    auto* sim = app.add_subcommand("simulate", "Run a scripted drilling session headless");
    sim->add_option("volume", sim_vol, "Label volume")->required();
    sim->add_option("--script", sim_script, "Trajectory JSON")->required();
    sim->add_option("--record", sim_record, "Recording directory");
    sim->add_option("--participant", sim_participant, "Participant id stored in the recording");
    sim->add_option("--batch-size", sim_batch, "Events per batch file (overrides config)");
    sim->add_option("--report", sim_report, "Print a metrics report")->check(CLI::IsMember({"none", "json", "table"}));

    // serve
    std::string sv_vol, sv_endpoint = "127.0.0.1:7878", sv_ui, sv_record;
    double sv_rate = 60.0, sv_speed = 1.0;
    std::uint64_t sv_ticks = 0, sv_token = 0;
    bool sv_require_token = false;
    auto* sv = app.add_subcommand("serve", "Serve an interactive session over the gateway protocol");
    sv->add_option("volume", sv_vol, "Label volume")->required();
    sv->add_option("--endpoint", sv_endpoint, "host:port to listen on")->envname("BURRSIM_ENDPOINT");
    sv->add_option("--state-rate", sv_rate, "State frames per simulated second");
    sv->add_option("--ui-dir", sv_ui, "Static UI bundle served over HTTP on the same port")->envname("BURRSIM_UI_DIR");
    sv->add_option("--speed", sv_speed, "Simulated seconds per wall second (0 = unpaced)");
    sv->add_option("--max-ticks", sv_ticks, "Stop simulating after this many ticks");
    sv->add_option("--token", sv_token, "Session token (default: derived from --seed)");
    sv->add_flag("--require-token", sv_require_token, "Controllers must present the session token");
    sv->add_option("--record", sv_record, "Record the served session into this directory");

    // replay
    std::string rp_dir, rp_vol, rp_out;
    bool rp_verify = false;
    std::size_t rp_upto = static_cast<std::size_t>(-1);
    auto* rp = app.add_subcommand("replay", "Rebuild the drilled grid from a recording");
    rp->add_option("recording", rp_dir, "Recording directory")->required();
    rp->add_option("--volume", rp_vol, "Initial volume (default: the recording's anatomy copy)");
    rp->add_flag("--verify", rp_verify, "Compare the replayed digest with the recorded final digest");
    rp->add_option("--upto", rp_upto, "Replay only the first N events");
    rp->add_option("-o,--output", rp_out, "Write the replayed grid as .nrrd");

    // metrics
    std::string mt_dir, mt_format = "table", mt_ply;
    auto* mt = app.add_subcommand("metrics", "Compute skill metrics from a recording");
    mt->add_option("recording", mt_dir, "Recording directory")->required();
    mt->add_option("--format", mt_format, "Output format")->check(CLI::IsMember({"json", "table"}));
    mt->add_option("--ply", mt_ply, "Export removed voxels as a PLY point cloud");

    // export
    std::string ex_dir, ex_h5;
    auto* ex = app.add_subcommand("export", "Export a recording to other formats");
    ex->add_option("recording", ex_dir, "Recording directory")->required();
    ex->add_option("--hdf5", ex_h5, "Output HDF5 file")->required();

    // render
    std::string rd_vol, rd_camera, rd_out, rd_size = "256x256";
    int rd_kernel = 3;
    bool rd_serial = false;
    auto* rd = app.add_subcommand("render", "Render ground-truth depth/label/normal maps");
    rd->add_option("volume", rd_vol, "Label volume")->required();
    rd->add_option("--camera", rd_camera, "cx,cy,cz:dx,dy,dz:ux,uy,uz:width_mm,height_mm")->required();
    rd->add_option("-o,--output", rd_out, "depth.png,label.png[,normal.png]")->required();
    rd->add_option("--size", rd_size, "Image size WxH in pixels");
    rd->add_option("--kernel", rd_kernel, "Normal smoothing kernel size N (odd)");
    rd->add_flag("--serial", rd_serial, "Use the single-threaded reference renderer");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*imp) {
            LabeledVolume vol = load_volume(imp_in);
            for (Label l : parse_label_list(imp_sensitive)) {
                vol.segments().set_sensitive(l, true);
            }
            write_volume(imp_out, vol);
            print_volume_summary(out, vol);
            return kOk;
        }
        if (*cv) {
            LabeledVolume vol = cv_from_stack ? import_image_stack(cv_in) : load_volume(cv_in);
            if (!cv_stack.empty()) {
                const auto n = export_image_stack(vol, cv_stack, parse_image_format(cv_format));
                out << "wrote " << n << " slices to " << cv_stack << "\n";
            }
            if (!cv_out.empty()) {
                write_volume(cv_out, vol, parse_type(cv_type),
                             cv_encoding == "raw" ? NrrdEncoding::Raw : NrrdEncoding::Gzip);
                out << "wrote " << cv_out << "\n";
            }
            if (cv_stack.empty() && cv_out.empty()) {
                fail(ErrorKind::Usage, "convert needs --to-stack and/or -o");
            }
            out << "digest " << digest_hex(grid_digest(vol)) << "\n";
            return kOk;
        }
        if (*sim) {
            SessionConfig cfg = load_session_config(g);
            if (sim_batch != 0) {
                cfg.batch_size = sim_batch;
            }
            LabeledVolume vol = load_volume(sim_vol);
            const LabeledVolume initial = vol;
            const Trajectory traj = load_trajectory(sim_script);
            Session session(std::move(vol), cfg);
            auto events = std::make_shared<VectorSink>();
            if (sim_report != "none") {
                session.add_sink(events);
            }
            RecordingMeta meta = session.recording_meta(sim_participant);
            if (!g.fixed_clock.empty()) {
                meta.wall_clock_start = g.fixed_clock;
            }
            if (!sim_record.empty()) {
                Recorder rec(sim_record, meta, cfg.batch_size);
                write_volume(fs::path(sim_record) / kAnatomyFile, initial);
                session.add_sink(std::make_shared<AsyncSink>(std::make_shared<RecorderSink>(std::move(rec)), 4096));
            }
            const SessionSummary s = session.run_script(traj);
            session.close();
            out << "steps " << s.steps << "\n";
            out << "t_end " << text::format_double(s.t_end) << "\n";
            out << "removed " << s.removals << "\n";
            out << "max_force " << text::format_double(s.max_force) << "\n";
            out << "warning_ticks " << s.warning_ticks << "\n";
            out << "final_digest " << digest_hex(s.final_digest) << "\n";
            if (sim_report != "none") {
                const MetricsReport r = compute_report(meta, events->events);
                out << (sim_report == "json" ? render_json(r) : render_table(r));
            }
            return kOk;
        }
        if (*sv) {
            SessionConfig cfg = load_session_config(g);
            LabeledVolume vol = load_volume(sv_vol);
            const LabeledVolume initial = vol;
            Session session(std::move(vol), cfg);
            if (!sv_record.empty()) {
                RecordingMeta meta = session.recording_meta("gateway");
                if (!g.fixed_clock.empty()) {
                    meta.wall_clock_start = g.fixed_clock;
                }
                Recorder rec(sv_record, meta, cfg.batch_size);
                write_volume(fs::path(sv_record) / kAnatomyFile, initial);
                session.add_sink(std::make_shared<AsyncSink>(std::make_shared<RecorderSink>(std::move(rec)), 1u << 16));
            }
            GatewayOptions opts;
            opts.endpoint = sv_endpoint;
            opts.state_rate_hz = sv_rate;
            opts.speed = sv_speed;
            opts.max_ticks = sv_ticks;
            opts.ui_dir = sv_ui;
            opts.require_token = sv_require_token;
            opts.token = sv_token != 0 ? sv_token : std::mt19937_64(g.seed)();
            GatewayServer server(session, opts);
            server.start();
            out << "listening on port " << server.port() << "\n" << std::flush;
            g_interrupted.store(false);
            auto prev_int = std::signal(SIGINT, on_signal);
            auto prev_term = std::signal(SIGTERM, on_signal);
            while (!g_interrupted.load() && !(sv_ticks != 0 && server.finished())) {
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
            }
            std::signal(SIGINT, prev_int);
            std::signal(SIGTERM, prev_term);
            if (sv_ticks != 0) {
                server.wait();
            }
            server.stop();
            session.close();
            out << "ticks " << session.tick_count() << "\n";
            out << "final_digest " << digest_hex(session.grid_digest()) << "\n";
            return kOk;
        }
        if (*rp) {
            RecordingReader reader(rp_dir);
            const fs::path vol_path = rp_vol.empty() ? fs::path(rp_dir) / kAnatomyFile : fs::path(rp_vol);
            LabeledVolume initial = load_volume(vol_path);
            const Manifest manifest = reader.manifest();
            const LabeledVolume result = replay_to_grid(std::move(initial), reader, rp_upto);
            const std::uint64_t d = grid_digest(result);
            out << "replayed_digest " << digest_hex(d) << "\n";
            if (!rp_out.empty()) {
                write_volume(rp_out, result);
            }
            if (rp_verify) {
                if (!manifest.final_digest) {
                    fail(ErrorKind::Incomplete, "recording has no final digest to verify against");
                }
                if (rp_upto != static_cast<std::size_t>(-1) && rp_upto < manifest.total_events) {
                    fail(ErrorKind::Usage, "--verify compares the full replay; drop --upto");
                }
                if (d != *manifest.final_digest) {
                    throw DigestMismatch("replayed digest " + digest_hex(d) + " differs from recorded " +
                                         digest_hex(*manifest.final_digest));
                }
                out << "digest match\n";
            }
            return kOk;
        }
        if (*mt) {
            const MetricsReport r = report(mt_dir);
            if (r.event_count == 0) {
                fail(ErrorKind::InsufficientData, "recording holds no events");
            }
            for (const auto& w : r.removal.warnings) {
                err << "warning: " << w << "\n";
            }
            if (!mt_ply.empty()) {
                write_ply(mt_ply, r.removal.points);
            }
            out << (mt_format == "json" ? render_json(r) : render_table(r));
            return kOk;
        }
        if (*ex) {
            export_hdf5(ex_dir, ex_h5);
            out << "wrote " << ex_h5 << "\n";
            return kOk;
        }
        if (*rd) {
            const LabeledVolume vol = load_volume(rd_vol);
            const OrthoCamera cam = parse_camera_spec(rd_camera);
            const auto x = rd_size.find('x');
            const auto w = x == std::string::npos ? std::nullopt : text::parse_int(rd_size.substr(0, x));
            const auto h = x == std::string::npos ? std::nullopt : text::parse_int(rd_size.substr(x + 1));
            if (!w || !h || *w < 1 || *h < 1 || *w > 16384 || *h > 16384) {
                fail(ErrorKind::Usage, "--size must be WxH, got '" + rd_size + "'");
            }
            std::vector<std::string> outputs;
            std::stringstream list(rd_out);
            for (std::string part; std::getline(list, part, ',');) {
                outputs.push_back(part);
            }
            if (outputs.size() < 2 || outputs.size() > 3) {
                fail(ErrorKind::Usage, "-o expects depth.png,label.png[,normal.png]");
            }
            RaycastParams params;
            params.kernel_n = rd_kernel;
            const auto W = static_cast<std::uint32_t>(*w);
            const auto H = static_cast<std::uint32_t>(*h);
            const GroundTruthMaps maps =
                rd_serial ? render_ortho_maps_serial(vol, cam, W, H, params) : render_ortho_maps(vol, cam, W, H, params);
            write_depth_png(outputs[0], maps);
            write_label_png(outputs[1], maps);
            if (outputs.size() == 3) {
                write_normal_png(outputs[2], maps);
            }
            std::size_t hits = 0;
            for (double d : maps.depth_mm) {
                hits += d != kDepthMiss ? 1 : 0;
            }
            out << "hits " << hits << " of " << maps.depth_mm.size() << "\n";
            out << "degenerate_normals " << maps.degenerate_normals << "\n";
            return kOk;
        }
    } catch (const DigestMismatch& e) {
        err << "error: class=digest-mismatch code=" << kDigestMismatch << " msg=" << e.what() << "\n";
        return kDigestMismatch;
    } catch (const Error& e) {
        const int code = exit_code(e.kind());
        err << "error: class=" << to_string(e.kind()) << " code=" << code << " msg=" << e.what() << "\n";
        return code;
    } catch (const std::exception& e) {
        err << "error: class=internal code=" << kGeneric << " msg=" << e.what() << "\n";
        return kGeneric;
    }
    return kUsage;
}

} // namespace burrsim::cli
