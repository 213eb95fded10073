#pragma once

#include "burrsim/gateway/wire.hpp"
#include "burrsim/session/session.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace burrsim {

struct GatewayOptions {
    // "host:port", optionally prefixed with "tcp://". Port 0 picks a free port.
    std::string endpoint = "127.0.0.1:7878";
    double state_rate_hz = 60.0;
    // Simulated seconds per wall-clock second; 0 runs ticks back to back.
    double speed = 1.0;
    // Stop stepping after this many ticks (0 = run until stopped). The last frame carries a digest.
    std::uint64_t max_ticks = 0;
    std::size_t max_frame_bytes = wire::kDefaultMaxFrameBytes;
    // Unsent bytes a connection may accumulate before it is dropped as a slow consumer.
    std::size_t max_outbound_bytes = 4u << 20;
    std::size_t snapshot_chunk_bytes = 1u << 16;
    // Every n-th StateFrame carries the grid digest.
    std::uint32_t verify_every = 60;
    std::uint64_t token = 0;
    // Controllers must present `token` in their Join.
    bool require_token = false;
    // Static files served to plain HTTP GET requests on the same port.
    std::filesystem::path ui_dir;
};

struct TickStats {
    std::uint64_t intervals = 0;
    double mean_s = 0.0;
    double stddev_s = 0.0;
    double max_s = 0.0;
};

struct GatewayCounters {
    std::uint64_t frames = 0;
    std::uint64_t connections = 0;
    std::uint64_t busy_refusals = 0;
    std::uint64_t slow_consumer_drops = 0;
    std::uint64_t framing_errors = 0;
};

// Runs the session on its own simulation thread and all socket I/O on a separate thread; the two
// exchange inputs and encoded frames through queues so network stalls never block a tick.
class GatewayServer {
public:
    GatewayServer(Session& session, GatewayOptions options);
    ~GatewayServer();
    GatewayServer(const GatewayServer&) = delete;
    GatewayServer& operator=(const GatewayServer&) = delete;

    // Network error when the endpoint cannot be bound.
    void start();
    void stop();
    // Blocks until `max_ticks` have run (or stop()). Rethrows a simulation failure.
    void wait();

    [[nodiscard]] std::uint16_t port() const noexcept;
    [[nodiscard]] bool finished() const noexcept;

    [[nodiscard]] TickStats tick_stats() const;
    void reset_tick_stats();
    // Distinct client input seqs in the order the simulation applied them.
    [[nodiscard]] std::vector<std::uint64_t> applied_input_seqs() const;
    [[nodiscard]] GatewayCounters counters() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// WebSocket accept token for a client key.
std::string websocket_accept(const std::string& key);

} // namespace burrsim
