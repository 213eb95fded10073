#pragma once

#include "burrsim/gateway/wire.hpp"

#include <chrono>
#include <string>

namespace burrsim {

// Client-side copy of the server grid, built from Hello + VolumeSnapshot and kept current by
// StateFrame deltas.
class MirrorVolume {
public:
    void begin(const wire::Hello& hello);
    // True once the last chunk arrived; Corruption when the assembled grid misses Hello's digest.
    bool add_chunk(const wire::VolumeSnapshot& chunk);
    // Frames at or before the snapshot's base seq are skipped. A gap raises State (resnapshot needed).
    // Returns false when the frame carries a digest that the mirror does not reproduce.
    bool apply(const wire::StateFrame& frame);

    [[nodiscard]] bool ready() const noexcept { return ready_; }
    [[nodiscard]] std::uint64_t last_seq() const noexcept { return last_seq_; }
    [[nodiscard]] std::uint64_t digest() const noexcept;
    [[nodiscard]] const GridGeometry& geometry() const noexcept { return geometry_; }
    [[nodiscard]] const std::vector<Label>& labels() const noexcept { return labels_; }
    [[nodiscard]] std::size_t verified_frames() const noexcept { return verified_; }

private:
    GridGeometry geometry_;
    std::uint64_t expected_digest_ = 0;
    std::vector<std::uint8_t> packed_;
    std::uint32_t next_chunk_ = 0;
    std::vector<Label> labels_;
    std::uint64_t last_seq_ = 0;
    std::size_t verified_ = 0;
    bool started_ = false;
    bool ready_ = false;
};

// Blocking stream client speaking the framed protocol.
class GatewayClient {
public:
    GatewayClient() = default;
    ~GatewayClient();
    GatewayClient(const GatewayClient&) = delete;
    GatewayClient& operator=(const GatewayClient&) = delete;

    // Network error when the connection fails.
    void connect(const std::string& host, std::uint16_t port);
    void send(const wire::Message& m);
    // nullopt on timeout. Network error when the server closed the connection.
    std::optional<wire::Message> receive(std::chrono::milliseconds timeout);
    void close() noexcept;
    [[nodiscard]] bool connected() const noexcept { return fd_ >= 0; }

private:
    int fd_ = -1;
    wire::FrameReader reader_;
};

} // namespace burrsim
