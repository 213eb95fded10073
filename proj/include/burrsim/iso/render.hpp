#pragma once

#include "burrsim/iso/isosmooth.hpp"

#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace burrsim {

struct OrthoCamera {
    Vec3 center;
    Vec3 view_dir{0.0, 0.0, 1.0};
    Vec3 up{0.0, 1.0, 0.0};
    double width_mm = 1.0;
    double height_mm = 1.0;
};

// Parses "cx,cy,cz:dx,dy,dz:ux,uy,uz:width,height" (all mm).
OrthoCamera parse_camera_spec(const std::string& spec);

inline constexpr double kDepthMiss = std::numeric_limits<double>::infinity();

struct GroundTruthMaps {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    // Row-major, row 0 at the top of the image.
    std::vector<double> depth_mm;
    std::vector<Label> labels;
    // World-space unit normals (zero on miss).
    std::vector<Vec3> normals;
    std::uint64_t degenerate_normals = 0;

    friend bool operator==(const GroundTruthMaps&, const GroundTruthMaps&) = default;
};

// One orthographic ray per pixel. The OpenMP version and the serial reference produce
// bit-identical maps.
GroundTruthMaps render_ortho_maps(const LabeledVolume& vol, const OrthoCamera& camera, std::uint32_t width,
                                  std::uint32_t height, const RaycastParams& params = {});
GroundTruthMaps render_ortho_maps_serial(const LabeledVolume& vol, const OrthoCamera& camera, std::uint32_t width,
                                         std::uint32_t height, const RaycastParams& params = {});

// Batched smoothed normals at the given normalized points. Degenerate points yield the zero vector.
std::vector<Vec3> smoothed_normals(const FieldView& field, std::span<const Vec3> points, const SmoothingKernel& kernel,
                                   NormalStats* stats = nullptr);
std::vector<Vec3> smoothed_normals_serial(const FieldView& field, std::span<const Vec3> points,
                                          const SmoothingKernel& kernel, NormalStats* stats = nullptr);

// Depth PNG: 16-bit, value = round(depth_mm / kDepthPngUnitMm), 65535 marks a miss.
inline constexpr double kDepthPngUnitMm = 0.01;
void write_depth_png(const std::filesystem::path& path, const GroundTruthMaps& maps);
// Label PNG: 16-bit raw label values.
void write_label_png(const std::filesystem::path& path, const GroundTruthMaps& maps);
// Normal PNG: RGB8 of (n + 1) / 2.
void write_normal_png(const std::filesystem::path& path, const GroundTruthMaps& maps);

} // namespace burrsim
