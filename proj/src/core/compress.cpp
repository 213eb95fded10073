#include "burrsim/core/compress.hpp"
#include "burrsim/core/errors.hpp"

#include <zlib.h>

#include <array>
#include <fstream>

namespace burrsim {

namespace {

std::vector<std::uint8_t> run_deflate(std::span<const std::uint8_t> input, int level, int window_bits)
{
    z_stream zs{};
    if (deflateInit2(&zs, level, Z_DEFLATED, window_bits, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        fail(ErrorKind::Io, "deflateInit2 failed");
    }
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(input.size())));
    zs.next_in = const_cast<Bytef*>(input.data());
    zs.avail_in = static_cast<uInt>(input.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) {
        fail(ErrorKind::Io, "deflate did not finish");
    }
    out.resize(produced);
    return out;
}

std::vector<std::uint8_t> run_inflate(std::span<const std::uint8_t> input, int window_bits, std::size_t size_hint,
                                      bool exact)
{
    z_stream zs{};
    if (inflateInit2(&zs, window_bits) != Z_OK) {
        fail(ErrorKind::Io, "inflateInit2 failed");
    }
    std::vector<std::uint8_t> out(size_hint > 0 ? size_hint : input.size() * 4 + 64);
    zs.next_in = const_cast<Bytef*>(input.data());
    zs.avail_in = static_cast<uInt>(input.size());
    int rc = Z_OK;
    while (true) {
        if (zs.total_out == out.size()) {
            if (exact) {
                // One more byte of room to detect overlong streams.
                out.resize(out.size() + 1);
            } else {
                out.resize(out.size() * 2);
            }
        }
        zs.next_out = out.data() + zs.total_out;
        zs.avail_out = static_cast<uInt>(out.size() - zs.total_out);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc == Z_STREAM_END) {
            break;
        }
        if (rc != Z_OK && rc != Z_BUF_ERROR) {
            break;
        }
        if (rc == Z_BUF_ERROR && zs.avail_in == 0) {
            break;
        }
        if (exact && zs.total_out > size_hint) {
            break;
        }
    }
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) {
        fail(ErrorKind::Corruption, "compressed stream is damaged or truncated");
    }
    out.resize(produced);
    if (exact && produced != size_hint) {
        fail(ErrorKind::Corruption, "decompressed size " + std::to_string(produced) + " != expected " +
                                        std::to_string(size_hint));
    }
    return out;
}

} // namespace

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> input, int level)
{
    return run_deflate(input, level, -MAX_WBITS);
}

std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> input, std::size_t expected_size)
{
    return run_inflate(input, -MAX_WBITS, expected_size, true);
}

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> input)
{
    return run_deflate(input, 6, MAX_WBITS + 16);
}

std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> input)
{
    return run_inflate(input, MAX_WBITS + 16, 0, false);
}

std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t seed)
{
    uLong c = seed;
    std::size_t off = 0;
    // zlib takes uInt lengths.
    while (off < data.size()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
        c = ::crc32(c, data.data() + off, n);
        off += n;
    }
    return static_cast<std::uint32_t>(c);
}

std::uint32_t crc32_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Io, "cannot open " + path.string());
    }
    std::array<char, 1 << 16> chunk{};
    uLong c = 0;
    while (in) {
        in.read(chunk.data(), chunk.size());
        const auto got = in.gcount();
        if (got > 0) {
            c = ::crc32(c, reinterpret_cast<const Bytef*>(chunk.data()), static_cast<uInt>(got));
        }
    }
    return static_cast<std::uint32_t>(c);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        fail(ErrorKind::Io, "cannot open " + path.string());
    }
    const auto size = static_cast<std::size_t>(in.tellg());
    std::vector<std::uint8_t> data(size);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
    if (!in) {
        fail(ErrorKind::Io, "short read on " + path.string());
    }
    return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::Io, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
        fail(ErrorKind::Io, "write failed on " + path.string());
    }
}

} // namespace burrsim
