#include "burrsim/gateway/client.hpp"

#include "burrsim/core/compress.hpp"
#include "burrsim/core/errors.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace burrsim {

void MirrorVolume::begin(const wire::Hello& hello)
{
    geometry_ = GridGeometry{hello.dims, hello.spacing, hello.origin};
    geometry_.validate();
    expected_digest_ = hello.digest;
    last_seq_ = hello.base_seq;
    packed_.clear();
    labels_.clear();
    next_chunk_ = 0;
    verified_ = 0;
    started_ = true;
    ready_ = false;
}

bool MirrorVolume::add_chunk(const wire::VolumeSnapshot& chunk)
{
    if (!started_) {
        fail(ErrorKind::State, "snapshot chunk before Hello");
    }
    if (chunk.chunk_index != next_chunk_ || chunk.chunk_index >= chunk.chunk_total) {
        fail(ErrorKind::State, "snapshot chunk " + std::to_string(chunk.chunk_index) + " out of order");
    }
    packed_.insert(packed_.end(), chunk.data.begin(), chunk.data.end());
    ++next_chunk_;
    if (next_chunk_ < chunk.chunk_total) {
        return false;
    }
    if (chunk.raw_bytes != geometry_.dims.count() * sizeof(Label)) {
        fail(ErrorKind::Corruption, "snapshot size does not match Hello dims");
    }
    const auto raw = inflate_raw(packed_, chunk.raw_bytes);
    labels_.resize(geometry_.dims.count());
    std::memcpy(labels_.data(), raw.data(), raw.size());
    packed_.clear();
    packed_.shrink_to_fit();
    if (digest() != expected_digest_) {
        fail(ErrorKind::Corruption, "snapshot digest " + digest_hex(digest()) + " does not match Hello digest " +
                                        digest_hex(expected_digest_));
    }
    ready_ = true;
    return true;
}

bool MirrorVolume::apply(const wire::StateFrame& frame)
{
    if (!ready_) {
        fail(ErrorKind::State, "state frame before the snapshot completed");
    }
    if (frame.seq <= last_seq_) {
        return true;
    }
    if (frame.seq != last_seq_ + 1) {
        fail(ErrorKind::State, "state frame gap: expected seq " + std::to_string(last_seq_ + 1) + ", got " +
                                   std::to_string(frame.seq) + "; resnapshot required");
    }
    for (const wire::DeltaVoxel& d : frame.delta) {
        const VoxelIndex v{d.i, d.j, d.k};
        if (!geometry_.in_bounds(v)) {
            fail(ErrorKind::Corruption, "delta voxel outside the grid");
        }
        labels_[geometry_.linear(v)] = 0;
    }
    last_seq_ = frame.seq;
    if (frame.digest) {
        if (digest() != *frame.digest) {
            return false;
        }
        ++verified_;
    }
    return true;
}

std::uint64_t MirrorVolume::digest() const noexcept { return grid_digest(geometry_, labels_); }

GatewayClient::~GatewayClient() { close(); }

void GatewayClient::connect(const std::string& host, std::uint16_t port)
{
    close();
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
        fail(ErrorKind::Network, "cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    int fd = -1;
    for (addrinfo* a = res; a; a = a->ai_next) {
        fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) {
            continue;
        }
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
            break;
        }
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) {
        fail(ErrorKind::Network, "cannot connect to " + host + ":" + service + ": " + std::strerror(errno));
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    fd_ = fd;
    reader_ = wire::FrameReader();
}

void GatewayClient::send(const wire::Message& m)
{
    if (fd_ < 0) {
        fail(ErrorKind::State, "client not connected");
    }
    const auto bytes = wire::encode(m);
    std::size_t off = 0;
    while (off < bytes.size()) {
        const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            fail(ErrorKind::Network, std::string("send failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

std::optional<wire::Message> GatewayClient::receive(std::chrono::milliseconds timeout)
{
    if (fd_ < 0) {
        fail(ErrorKind::State, "client not connected");
    }
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::uint8_t buf[65536];
    while (true) {
        if (auto frame = reader_.next_frame()) {
            return wire::decode(*frame);
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() < 0) {
            return std::nullopt;
        }
        pollfd p{fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
        if (rc < 0 && errno != EINTR) {
            fail(ErrorKind::Network, std::string("poll failed: ") + std::strerror(errno));
        }
        if (rc <= 0) {
            continue;
        }
        const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
        if (n == 0) {
            fail(ErrorKind::Network, "connection closed by server");
        }
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) {
                continue;
            }
            fail(ErrorKind::Network, std::string("recv failed: ") + std::strerror(errno));
        }
        reader_.feed({buf, static_cast<std::size_t>(n)});
    }
}

void GatewayClient::close() noexcept
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

} // namespace burrsim
