#pragma once

// Per-pixel work shared by the serial and OpenMP renderers.

#include "burrsim/iso/render.hpp"

namespace burrsim::detail {

struct CameraBasis {
    Vec3 forward;
    Vec3 right;
    Vec3 up;
    // Ray direction in normalized coordinates and its pre-normalization length.
    Vec3 dir_normalized;
    double dir_scale = 1.0;
};

CameraBasis make_basis(const FieldView& field, const OrthoCamera& camera);

struct PixelResult {
    double depth_mm = kDepthMiss;
    Label label = 0;
    Vec3 normal;
    bool degenerate = false;
};

PixelResult trace_pixel(const FieldView& field, const OrthoCamera& camera, const CameraBasis& basis, std::uint32_t u,
                        std::uint32_t v, std::uint32_t width, std::uint32_t height, const RaycastParams& params);

inline void store(GroundTruthMaps& maps, std::size_t n, const PixelResult& r)
{
    maps.depth_mm[n] = r.depth_mm;
    maps.labels[n] = r.label;
    maps.normals[n] = r.normal;
}

GroundTruthMaps allocate_maps(std::uint32_t width, std::uint32_t height);

} // namespace burrsim::detail
