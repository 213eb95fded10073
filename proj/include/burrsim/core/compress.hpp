#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace burrsim {

// Thin wrappers over zlib.
std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> input, int level = 6);
// `expected_size` is the exact decompressed length; a mismatch raises Corruption.
std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> input, std::size_t expected_size);

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> input);
std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> input);

std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t seed = 0);
// Streams the file in fixed-size chunks.
std::uint32_t crc32_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);

} // namespace burrsim
