#include "burrsim/gateway/server.hpp"

#include "burrsim/core/errors.hpp"
#include "burrsim/core/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <map>
#include <mutex>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <thread>
#include <unistd.h>

namespace burrsim {

using Clock = std::chrono::steady_clock;

std::string websocket_accept(const std::string& key)
{
    static constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
    const std::string input = key + std::string(kGuid);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(input.data(), input.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
        fail(ErrorKind::Network, "SHA-1 digest failed");
    }
    std::string out(4 * ((len + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), digest, static_cast<int>(len));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

namespace {

enum class ConnMode { Unknown, Raw, Http, WebSocket };

struct Conn {
    int fd = -1;
    ConnMode mode = ConnMode::Unknown;
    std::vector<std::uint8_t> pending;  // bytes before the mode is known / HTTP header
    wire::FrameReader reader;
    std::vector<std::uint8_t> ws_in;
    std::vector<std::uint8_t> ws_message;
    std::vector<std::uint8_t> out;
    std::size_t out_pos = 0;
    bool joined = false;
    bool live = false;
    bool close_after_flush = false;
    bool dead = false;
    wire::Role role = wire::Role::Spectator;

    explicit Conn(std::size_t max_frame) : reader(max_frame) {}
    [[nodiscard]] std::size_t unsent() const noexcept { return out.size() - out_pos; }
};

struct SnapshotItem {
    std::uint64_t conn = 0;
    std::vector<Label> labels;
    std::uint64_t base_seq = 0;
    std::uint32_t burr = 0;
};

struct OutItem {
    // Broadcast when `snapshot` is empty.
    std::vector<std::uint8_t> frame;
    std::optional<SnapshotItem> snapshot;
};

void set_nonblocking(int fd)
{
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

std::pair<std::string, std::string> split_endpoint(std::string ep)
{
    if (ep.rfind("tcp://", 0) == 0) {
        ep = ep.substr(6);
    }
    const auto colon = ep.rfind(':');
    if (colon == std::string::npos) {
        fail(ErrorKind::Usage, "endpoint '" + ep + "' must be host:port");
    }
    std::string host = ep.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') {
        host = host.substr(1, host.size() - 2);
    }
    return {host, ep.substr(colon + 1)};
}

std::string content_type(const std::filesystem::path& p)
{
    static const std::map<std::string, std::string> types{
        {".html", "text/html; charset=utf-8"}, {".js", "text/javascript"}, {".mjs", "text/javascript"},
        {".css", "text/css"}, {".json", "application/json"}, {".png", "image/png"}, {".svg", "image/svg+xml"},
        {".wasm", "application/wasm"}, {".ico", "image/x-icon"}, {".txt", "text/plain; charset=utf-8"}};
    auto it = types.find(text::to_lower(p.extension().string()));
    return it == types.end() ? "application/octet-stream" : it->second;
}

void ws_wrap(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> payload, std::uint8_t opcode = 0x2)
{
    out.push_back(static_cast<std::uint8_t>(0x80 | opcode));
    const std::size_t n = payload.size();
    if (n < 126) {
        out.push_back(static_cast<std::uint8_t>(n));
    } else if (n <= 0xFFFF) {
        out.push_back(126);
        out.push_back(static_cast<std::uint8_t>(n >> 8));
        out.push_back(static_cast<std::uint8_t>(n));
    } else {
        out.push_back(127);
        for (int s = 56; s >= 0; s -= 8) {
            out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(n) >> s));
        }
    }
    out.insert(out.end(), payload.begin(), payload.end());
}

} // namespace

struct GatewayServer::Impl {
    Session& session;
    GatewayOptions opts;

    int listen_fd = -1;
    int wake_r = -1;
    int wake_w = -1;
    std::uint16_t bound_port = 0;
    std::thread io_thread;
    std::thread sim_thread;
    std::atomic<bool> stopping{false};
    bool started = false;

    // Simulation <- I/O
    mutable std::mutex in_mutex;
    std::condition_variable in_cv;
    std::optional<wire::InputFrame> latest_input;
    bool controller_present = false;
    std::vector<std::uint64_t> snapshot_requests;

    // Simulation -> I/O
    std::mutex out_mutex;
    std::vector<OutItem> outbox;

    // Status
    mutable std::mutex status_mutex;
    std::condition_variable status_cv;
    bool sim_done = false;
    std::exception_ptr sim_error;
    std::vector<double> tick_times;
    std::vector<std::uint64_t> applied_seqs;
    GatewayCounters counters;

    // I/O thread state
    std::map<std::uint64_t, Conn> conns;
    std::uint64_t next_conn_id = 1;
    std::optional<std::uint64_t> controller;
    std::uint64_t last_input_seq = 0;

    Impl(Session& s, GatewayOptions o) : session(s), opts(std::move(o)) {}

    void wake() const noexcept
    {
        const std::uint8_t b = 1;
        [[maybe_unused]] ssize_t n = ::write(wake_w, &b, 1);
    }

    void bind_listener()
    {
        auto [host, port] = split_endpoint(opts.endpoint);
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        hints.ai_flags = AI_PASSIVE;
        addrinfo* res = nullptr;
        if (int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &res); rc != 0) {
            fail(ErrorKind::Network, "cannot resolve endpoint " + opts.endpoint + ": " + ::gai_strerror(rc));
        }
        std::string last_error = "no address";
        for (addrinfo* a = res; a; a = a->ai_next) {
            const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
            if (fd < 0) {
                last_error = std::strerror(errno);
                continue;
            }
            int one = 1;
            ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
            if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
                listen_fd = fd;
                break;
            }
            last_error = std::strerror(errno);
            ::close(fd);
        }
        ::freeaddrinfo(res);
        if (listen_fd < 0) {
            fail(ErrorKind::Network, "cannot bind " + opts.endpoint + ": " + last_error);
        }
        sockaddr_storage addr{};
        socklen_t len = sizeof addr;
        ::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
        bound_port = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                                : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
        set_nonblocking(listen_fd);
        int fds[2];
        if (::pipe(fds) != 0) {
            fail(ErrorKind::Network, std::string("pipe failed: ") + std::strerror(errno));
        }
        wake_r = fds[0];
        wake_w = fds[1];
        set_nonblocking(wake_r);
        set_nonblocking(wake_w);
    }

    // ---- simulation thread -------------------------------------------------------------

    void post(OutItem item)
    {
        {
            std::lock_guard lock(out_mutex);
            outbox.push_back(std::move(item));
        }
        wake();
    }

    void serve_snapshot_requests(std::uint64_t frame_seq)
    {
        std::vector<std::uint64_t> requests;
        {
            std::lock_guard lock(in_mutex);
            requests.swap(snapshot_requests);
        }
        for (std::uint64_t id : requests) {
            const auto labels = session.volume().labels();
            post(OutItem{{}, SnapshotItem{id, std::vector<Label>(labels.begin(), labels.end()), frame_seq, session.burr_id()}});
        }
    }

    void sim_loop()
    {
        const SessionConfig& cfg = session.config();
        const double dt = 1.0 / cfg.tick_rate_hz;
        const GridGeometry& g = session.volume().geometry();
        DrillInput idle;
        idle.tip_position = g.origin - g.extent();
        idle.burr_id = session.burr_id();
        Pose camera;
        std::uint64_t frame_seq = 0;
        std::uint64_t ticks = 0;
        std::uint64_t applied_seq = 0;
        std::vector<wire::DeltaVoxel> delta;
        std::map<Label, WarningKind> warnings;
        const auto start = Clock::now();

        serve_snapshot_requests(frame_seq);
        while (!stopping.load()) {
            if (opts.max_ticks != 0 && ticks >= opts.max_ticks) {
                break;
            }
            if (opts.speed > 0.0) {
                const auto due = start + std::chrono::duration_cast<Clock::duration>(
                                             std::chrono::duration<double>(static_cast<double>(ticks) * dt / opts.speed));
                std::this_thread::sleep_until(due);
            }
            const auto now = Clock::now();
            DrillInput input = idle;
            {
                std::lock_guard lock(in_mutex);
                if (latest_input) {
                    input = latest_input->input;
                    camera = latest_input->camera;
                    applied_seq = latest_input->seq;
                    if (!controller_present) {
                        input.pedal = 0.0;
                    }
                }
            }
            idle.tip_position = input.tip_position;
            idle.tip_orientation = input.tip_orientation;
            idle.burr_id = input.burr_id;
            session.set_camera(camera);
            const StepReport r = session.step(input);
            ++ticks;
            {
                std::lock_guard lock(status_mutex);
                tick_times.push_back(std::chrono::duration<double>(now - start).count());
                if (applied_seq != 0 && (applied_seqs.empty() || applied_seqs.back() != applied_seq)) {
                    applied_seqs.push_back(applied_seq);
                }
            }
            for (const RemovedVoxel& rv : r.outcome.removed) {
                delta.push_back({rv.index.i, rv.index.j, rv.index.k, rv.label});
            }
            for (const Warning& w : r.outcome.warnings) {
                auto [it, inserted] = warnings.emplace(w.label, w.kind);
                if (!inserted && w.kind == WarningKind::Removal) {
                    it->second = WarningKind::Removal;
                }
            }
            const bool last = opts.max_ticks != 0 && ticks >= opts.max_ticks;
            const double ratio = opts.state_rate_hz / cfg.tick_rate_hz;
            const bool due = ratio >= 1.0 || std::floor(static_cast<double>(ticks) * ratio) >
                                                 std::floor(static_cast<double>(ticks - 1) * ratio);
            if (due || last) {
                wire::StateFrame f;
                f.seq = ++frame_seq;
                f.tick = r.tick;
                f.t = r.t;
                f.drill = r.drill;
                f.F_collision = r.outcome.F_collision;
                f.F_haptic = r.outcome.F_haptic;
                f.pitch = r.outcome.pitch;
                f.burr_id = r.burr_id;
                f.pedal = sanitize(input).pedal;
                f.input_seq = applied_seq;
                if (last || (opts.verify_every != 0 && f.seq % opts.verify_every == 0)) {
                    f.digest = session.grid_digest();
                }
                for (const auto& [label, kind] : warnings) {
                    f.warnings.push_back({label, kind});
                }
                f.delta = std::move(delta);
                delta.clear();
                warnings.clear();
                post(OutItem{wire::encode(f), std::nullopt});
                {
                    std::lock_guard lock(status_mutex);
                    ++counters.frames;
                }
                serve_snapshot_requests(frame_seq);
            }
        }
        {
            std::lock_guard lock(status_mutex);
            sim_done = true;
        }
        status_cv.notify_all();
        // Late joiners still get a snapshot of the final grid.
        while (!stopping.load()) {
            std::unique_lock lock(in_mutex);
            in_cv.wait_for(lock, std::chrono::milliseconds(50), [&] { return stopping.load() || !snapshot_requests.empty(); });
            lock.unlock();
            serve_snapshot_requests(frame_seq);
        }
    }

    void sim_main()
    {
        try {
            sim_loop();
        } catch (...) {
            {
                std::lock_guard lock(status_mutex);
                sim_error = std::current_exception();
                sim_done = true;
            }
            status_cv.notify_all();
        }
    }

    // ---- I/O thread --------------------------------------------------------------------

    void queue_frame(Conn& c, std::span<const std::uint8_t> frame)
    {
        if (c.mode == ConnMode::WebSocket) {
            ws_wrap(c.out, frame);
        } else {
            c.out.insert(c.out.end(), frame.begin(), frame.end());
        }
    }

    void queue_message(Conn& c, const wire::Message& m) { queue_frame(c, wire::encode(m)); }

    void send_error(Conn& c, wire::ErrorCode code, const std::string& msg, bool then_close)
    {
        queue_message(c, wire::ErrorMsg{code, msg});
        if (then_close) {
            c.close_after_flush = true;
        }
    }

    void deliver_snapshot(SnapshotItem& item)
    {
        auto it = conns.find(item.conn);
        if (it == conns.end() || it->second.dead) {
            return;
        }
        Conn& c = it->second;
        const GridGeometry& g = session.volume().geometry();
        wire::Hello hello;
        hello.role = c.role;
        hello.session_token = c.role == wire::Role::Controller ? opts.token : 0;
        hello.digest = grid_digest(g, item.labels);
        hello.dims = g.dims;
        hello.spacing = g.spacing;
        hello.origin = g.origin;
        hello.tick_rate_hz = session.config().tick_rate_hz;
        hello.state_rate_hz = opts.state_rate_hz;
        hello.base_seq = item.base_seq;
        hello.segments = wire::to_wire(session.volume().segments());
        queue_message(c, hello);
        queue_message(c, wire::BurrList{session.config().burrs, item.burr});
        for (const auto& chunk : wire::make_snapshot(item.labels, opts.snapshot_chunk_bytes)) {
            queue_message(c, chunk);
        }
        c.live = true;
    }

    void drain_outbox()
    {
        std::vector<OutItem> items;
        {
            std::lock_guard lock(out_mutex);
            items.swap(outbox);
        }
        for (OutItem& item : items) {
            if (item.snapshot) {
                deliver_snapshot(*item.snapshot);
                continue;
            }
            for (auto& [id, c] : conns) {
                if (!c.live || c.dead || c.close_after_flush) {
                    continue;
                }
                queue_frame(c, item.frame);
                if (c.unsent() > opts.max_outbound_bytes) {
                    send_error(c, wire::ErrorCode::SlowConsumer, "outbound buffer limit exceeded", true);
                    flush(c);
                    c.dead = true;
                    std::lock_guard lock(status_mutex);
                    ++counters.slow_consumer_drops;
                }
            }
        }
    }

    void flush(Conn& c)
    {
        while (c.unsent() > 0) {
            const ssize_t n = ::send(c.fd, c.out.data() + c.out_pos, c.unsent(), MSG_NOSIGNAL | MSG_DONTWAIT);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                if (errno != EAGAIN && errno != EWOULDBLOCK) {
                    c.dead = true;
                }
                break;
            }
            c.out_pos += static_cast<std::size_t>(n);
        }
        if (c.out_pos > 0 && c.out_pos == c.out.size()) {
            c.out.clear();
            c.out_pos = 0;
        } else if (c.out_pos > (1u << 20)) {
            c.out.erase(c.out.begin(), c.out.begin() + static_cast<std::ptrdiff_t>(c.out_pos));
            c.out_pos = 0;
        }
        if (c.close_after_flush && c.unsent() == 0) {
            c.dead = true;
        }
    }

    void handle_message(std::uint64_t id, Conn& c, const wire::Message& m)
    {
        if (!c.joined) {
            const auto* join = std::get_if<wire::Join>(&m);
            if (!join) {
                send_error(c, wire::ErrorCode::BadRequest, "first message must be Join", true);
                return;
            }
            if (join->role == wire::Role::Controller) {
                if (controller) {
                    send_error(c, wire::ErrorCode::Busy, "session already has a controller", true);
                    std::lock_guard lock(status_mutex);
                    ++counters.busy_refusals;
                    return;
                }
                if (opts.require_token && join->token != opts.token) {
                    send_error(c, wire::ErrorCode::BadRequest, "session token mismatch", true);
                    return;
                }
                controller = id;
                std::lock_guard lock(in_mutex);
                controller_present = true;
            }
            c.joined = true;
            c.role = join->role;
            {
                std::lock_guard lock(in_mutex);
                snapshot_requests.push_back(id);
            }
            in_cv.notify_all();
            return;
        }
        if (const auto* in = std::get_if<wire::InputFrame>(&m)) {
            if (c.role != wire::Role::Controller) {
                send_error(c, wire::ErrorCode::BadRequest, "spectators cannot send input", false);
                return;
            }
            const Vec3 p = in->input.tip_position;
            if (in->seq <= last_input_seq) {
                send_error(c, wire::ErrorCode::BadRequest, "input seq must increase", false);
                return;
            }
            if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) || !std::isfinite(in->input.pedal) ||
                !is_unit(in->input.tip_orientation) || in->input.burr_id >= session.config().burrs.size()) {
                send_error(c, wire::ErrorCode::BadRequest, "invalid drill input", false);
                return;
            }
            last_input_seq = in->seq;
            std::lock_guard lock(in_mutex);
            latest_input = *in;
            return;
        }
        if (const auto* ack = std::get_if<wire::Ack>(&m)) {
            queue_message(c, *ack);
            return;
        }
        send_error(c, wire::ErrorCode::BadRequest, "unexpected message", false);
    }

    void handle_frames(std::uint64_t id, Conn& c)
    {
        while (!c.dead && !c.close_after_flush) {
            std::optional<std::vector<std::uint8_t>> frame;
            try {
                frame = c.reader.next_frame();
            } catch (const Error& e) {
                send_error(c, wire::ErrorCode::Framing, e.what(), true);
                std::lock_guard lock(status_mutex);
                ++counters.framing_errors;
                return;
            }
            if (!frame) {
                return;
            }
            try {
                handle_message(id, c, wire::decode(*frame, opts.max_frame_bytes));
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::Unsupported) {
                    send_error(c, wire::ErrorCode::Unsupported, e.what(), false);
                } else {
                    send_error(c, wire::ErrorCode::Framing, e.what(), false);
                    std::lock_guard lock(status_mutex);
                    ++counters.framing_errors;
                }
            }
        }
    }

    void serve_static(Conn& c, const std::string& target)
    {
        auto respond = [&](int status, const std::string& reason, const std::string& type, const std::string& body) {
            std::string head = "HTTP/1.1 " + std::to_string(status) + " " + reason + "\r\nContent-Type: " + type +
                               "\r\nContent-Length: " + std::to_string(body.size()) + "\r\nConnection: close\r\n\r\n";
            c.out.insert(c.out.end(), head.begin(), head.end());
            c.out.insert(c.out.end(), body.begin(), body.end());
            c.close_after_flush = true;
        };
        if (opts.ui_dir.empty()) {
            respond(404, "Not Found", "text/plain", "no ui directory configured\n");
            return;
        }
        std::string path = target.substr(0, target.find_first_of("?#"));
        if (path.empty() || path.back() == '/') {
            path += "index.html";
        }
        if (path.find("..") != std::string::npos || path.front() != '/') {
            respond(400, "Bad Request", "text/plain", "bad path\n");
            return;
        }
        const auto file = opts.ui_dir / path.substr(1);
        std::ifstream in(file, std::ios::binary);
        if (!in || std::filesystem::is_directory(file)) {
            respond(404, "Not Found", "text/plain", "not found\n");
            return;
        }
        std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        respond(200, "OK", content_type(file), body);
    }

    void handle_http(Conn& c)
    {
        const std::string_view data(reinterpret_cast<const char*>(c.pending.data()), c.pending.size());
        const auto end = data.find("\r\n\r\n");
        if (end == std::string_view::npos) {
            if (c.pending.size() > 16384) {
                c.dead = true;
            }
            return;
        }
        const std::string head(data.substr(0, end));
        std::vector<std::uint8_t> rest(c.pending.begin() + static_cast<std::ptrdiff_t>(end + 4), c.pending.end());
        c.pending.clear();

        std::map<std::string, std::string> headers;
        std::size_t line_end = head.find("\r\n");
        const std::string request_line = head.substr(0, line_end);
        while (line_end != std::string::npos) {
            const std::size_t next = head.find("\r\n", line_end + 2);
            const std::string line = head.substr(line_end + 2, next == std::string::npos ? std::string::npos : next - line_end - 2);
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                headers[text::to_lower(text::trim(line.substr(0, colon)))] = std::string(text::trim(line.substr(colon + 1)));
            }
            line_end = next;
        }
        const auto parts = text::split_ws(request_line);
        const std::string target = parts.size() >= 2 ? std::string(parts[1]) : "/";
        const bool upgrade = text::to_lower(headers["upgrade"]) == "websocket" && !headers["sec-websocket-key"].empty();
        if (!upgrade) {
            serve_static(c, target);
            return;
        }
        const std::string reply = "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                                  "Sec-WebSocket-Accept: " +
                                  websocket_accept(headers["sec-websocket-key"]) + "\r\n\r\n";
        c.out.insert(c.out.end(), reply.begin(), reply.end());
        c.mode = ConnMode::WebSocket;
        c.ws_in = std::move(rest);
    }

    void handle_ws(std::uint64_t id, Conn& c)
    {
        std::size_t pos = 0;
        auto& b = c.ws_in;
        while (!c.dead && !c.close_after_flush) {
            if (b.size() - pos < 2) {
                break;
            }
            const bool fin = (b[pos] & 0x80) != 0;
            const std::uint8_t opcode = b[pos] & 0x0F;
            const bool masked = (b[pos + 1] & 0x80) != 0;
            std::uint64_t len = b[pos + 1] & 0x7F;
            std::size_t hdr = 2;
            if (len == 126) {
                if (b.size() - pos < 4) {
                    break;
                }
                len = (std::uint64_t(b[pos + 2]) << 8) | b[pos + 3];
                hdr = 4;
            } else if (len == 127) {
                if (b.size() - pos < 10) {
                    break;
                }
                len = 0;
                for (int i = 0; i < 8; ++i) {
                    len = (len << 8) | b[pos + 2 + static_cast<std::size_t>(i)];
                }
                hdr = 10;
            }
            if (!masked || len > opts.max_frame_bytes + wire::kFrameHeaderBytes) {
                c.dead = true;
                break;
            }
            if (b.size() - pos < hdr + 4 + len) {
                break;
            }
            const std::uint8_t* mask = &b[pos + hdr];
            std::vector<std::uint8_t> payload(static_cast<std::size_t>(len));
            for (std::size_t i = 0; i < payload.size(); ++i) {
                payload[i] = b[pos + hdr + 4 + i] ^ mask[i % 4];
            }
            pos += hdr + 4 + static_cast<std::size_t>(len);
            switch (opcode) {
            case 0x0:
            case 0x2:
                c.ws_message.insert(c.ws_message.end(), payload.begin(), payload.end());
                if (fin) {
                    c.reader.feed(c.ws_message);
                    c.ws_message.clear();
                    handle_frames(id, c);
                }
                break;
            case 0x8:
                ws_wrap(c.out, payload, 0x8);
                c.close_after_flush = true;
                break;
            case 0x9:
                ws_wrap(c.out, payload, 0xA);
                break;
            case 0xA:
                break;
            default:
                c.dead = true;
                break;
            }
        }
        b.erase(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(pos));
    }

    void on_readable(std::uint64_t id, Conn& c)
    {
        std::uint8_t buf[65536];
        const ssize_t n = ::recv(c.fd, buf, sizeof buf, MSG_DONTWAIT);
        if (n == 0) {
            c.dead = true;
            return;
        }
        if (n < 0) {
            if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
                c.dead = true;
            }
            return;
        }
        const std::span<const std::uint8_t> data(buf, static_cast<std::size_t>(n));
        switch (c.mode) {
        case ConnMode::Unknown:
            c.pending.insert(c.pending.end(), data.begin(), data.end());
            if (c.pending.size() < 4) {
                return;
            }
            if (std::memcmp(c.pending.data(), "GET ", 4) == 0) {
                c.mode = ConnMode::Http;
                handle_http(c);
                if (c.mode == ConnMode::WebSocket) {
                    handle_ws(id, c);
                }
            } else {
                c.mode = ConnMode::Raw;
                c.reader.feed(c.pending);
                c.pending.clear();
                handle_frames(id, c);
            }
            return;
        case ConnMode::Raw:
            c.reader.feed(data);
            handle_frames(id, c);
            return;
        case ConnMode::Http:
            c.pending.insert(c.pending.end(), data.begin(), data.end());
            handle_http(c);
            if (c.mode == ConnMode::WebSocket) {
                handle_ws(id, c);
            }
            return;
        case ConnMode::WebSocket:
            c.ws_in.insert(c.ws_in.end(), data.begin(), data.end());
            handle_ws(id, c);
            return;
        }
    }

    void reap()
    {
        for (auto it = conns.begin(); it != conns.end();) {
            if (!it->second.dead) {
                ++it;
                continue;
            }
            ::close(it->second.fd);
            if (controller && *controller == it->first) {
                controller.reset();
                std::lock_guard lock(in_mutex);
                controller_present = false;
            }
            it = conns.erase(it);
        }
    }

    void io_main()
    {
        std::vector<pollfd> fds;
        std::vector<std::uint64_t> ids;
        while (!stopping.load()) {
            fds.clear();
            ids.clear();
            fds.push_back({listen_fd, POLLIN, 0});
            fds.push_back({wake_r, POLLIN, 0});
            for (auto& [id, c] : conns) {
                short ev = POLLIN;
                if (c.unsent() > 0) {
                    ev |= POLLOUT;
                }
                fds.push_back({c.fd, ev, 0});
                ids.push_back(id);
            }
            if (::poll(fds.data(), fds.size(), 100) < 0 && errno != EINTR) {
                break;
            }
            if (fds[1].revents & POLLIN) {
                std::uint8_t drain[256];
                while (::read(wake_r, drain, sizeof drain) > 0) {
                }
            }
            for (std::size_t i = 0; i < ids.size(); ++i) {
                auto it = conns.find(ids[i]);
                if (it == conns.end()) {
                    continue;
                }
                Conn& c = it->second;
                const short re = fds[i + 2].revents;
                if (re & (POLLIN | POLLHUP | POLLERR)) {
                    on_readable(ids[i], c);
                }
            }
            if (fds[0].revents & POLLIN) {
                while (true) {
                    const int fd = ::accept(listen_fd, nullptr, nullptr);
                    if (fd < 0) {
                        break;
                    }
                    set_nonblocking(fd);
                    int one = 1;
                    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
                    auto [it, _] = conns.emplace(next_conn_id++, Conn(opts.max_frame_bytes));
                    it->second.fd = fd;
                    std::lock_guard lock(status_mutex);
                    ++counters.connections;
                }
            }
            drain_outbox();
            for (auto& [id, c] : conns) {
                if (!c.dead) {
                    flush(c);
                }
            }
            reap();
        }
        for (auto& [id, c] : conns) {
            ::close(c.fd);
        }
        conns.clear();
    }
};

GatewayServer::GatewayServer(Session& session, GatewayOptions options)
    : impl_(std::make_unique<Impl>(session, std::move(options)))
{
    require(impl_->opts.state_rate_hz > 0.0, "state rate must be positive");
    require(impl_->opts.speed >= 0.0, "speed must be >= 0");
    require(impl_->opts.snapshot_chunk_bytes > 0, "snapshot chunk size must be positive");
}

GatewayServer::~GatewayServer() { stop(); }

void GatewayServer::start()
{
    if (impl_->started) {
        fail(ErrorKind::State, "gateway already started");
    }
    if (!impl_->session.is_open()) {
        fail(ErrorKind::State, "session is closed");
    }
    impl_->bind_listener();
    impl_->started = true;
    impl_->io_thread = std::thread([this] { impl_->io_main(); });
    impl_->sim_thread = std::thread([this] { impl_->sim_main(); });
}

void GatewayServer::stop()
{
    if (!impl_->started) {
        return;
    }
    impl_->stopping.store(true);
    impl_->in_cv.notify_all();
    impl_->wake();
    if (impl_->sim_thread.joinable()) {
        impl_->sim_thread.join();
    }
    if (impl_->io_thread.joinable()) {
        impl_->io_thread.join();
    }
    for (int* fd : {&impl_->listen_fd, &impl_->wake_r, &impl_->wake_w}) {
        if (*fd >= 0) {
            ::close(*fd);
            *fd = -1;
        }
    }
    impl_->started = false;
}

void GatewayServer::wait()
{
    std::unique_lock lock(impl_->status_mutex);
    impl_->status_cv.wait(lock, [&] { return impl_->sim_done || impl_->stopping.load(); });
    if (impl_->sim_error) {
        std::rethrow_exception(impl_->sim_error);
    }
}

std::uint16_t GatewayServer::port() const noexcept { return impl_->bound_port; }

bool GatewayServer::finished() const noexcept
{
    std::lock_guard lock(impl_->status_mutex);
    return impl_->sim_done;
}

TickStats GatewayServer::tick_stats() const
{
    std::lock_guard lock(impl_->status_mutex);
    TickStats s;
    const auto& t = impl_->tick_times;
    if (t.size() < 2) {
        return s;
    }
    s.intervals = t.size() - 1;
    double sum = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double d = t[i] - t[i - 1];
        sum += d;
        s.max_s = std::fmax(s.max_s, d);
    }
    s.mean_s = sum / static_cast<double>(s.intervals);
    double var = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double d = t[i] - t[i - 1] - s.mean_s;
        var += d * d;
    }
    s.stddev_s = std::sqrt(var / static_cast<double>(s.intervals));
    return s;
}

void GatewayServer::reset_tick_stats()
{
    std::lock_guard lock(impl_->status_mutex);
    impl_->tick_times.clear();
}

std::vector<std::uint64_t> GatewayServer::applied_input_seqs() const
{
    std::lock_guard lock(impl_->status_mutex);
    return impl_->applied_seqs;
}

GatewayCounters GatewayServer::counters() const
{
    std::lock_guard lock(impl_->status_mutex);
    return impl_->counters;
}

} // namespace burrsim
