#pragma once

#include "burrsim/volume/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace burrsim {

enum class ImageFormat { Png, Jpeg };

ImageFormat parse_image_format(const std::string& name);

// 8-bit RGB raster, row-major, rows top to bottom.
struct RgbImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> pixels;
};

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);
// 16-bit single channel, row-major.
void write_png_gray16(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
                      const std::vector<std::uint16_t>& pixels);
RgbImage read_png_rgb(const std::filesystem::path& path);
void write_jpeg_rgb(const std::filesystem::path& path, const RgbImage& image, int quality = 95);
RgbImage read_jpeg_rgb(const std::filesystem::path& path);

inline constexpr const char* kSidecarName = "volume.meta";

std::string slice_file_name(std::uint32_t k, std::uint32_t slice_count, ImageFormat format);

// Writes one image per z slice (pixel (i,j) = voxel (i,j,k), colored by segment, air black)
// plus the `volume.meta` sidecar. Returns the number of slice images written.
std::size_t export_image_stack(const LabeledVolume& vol, const std::filesystem::path& dir, ImageFormat format);

// Inverse of export_image_stack. PNG stacks reproduce the label grid exactly; JPEG pixels are
// mapped to the nearest segment color.
LabeledVolume import_image_stack(const std::filesystem::path& dir);

} // namespace burrsim
