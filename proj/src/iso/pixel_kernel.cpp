#include "pixel_kernel.hpp"

#include "burrsim/core/errors.hpp"

namespace burrsim::detail {

CameraBasis make_basis(const FieldView& field, const OrthoCamera& camera)
{
    CameraBasis b;
    require(norm(camera.view_dir) > 0.0, "camera view direction must be non-zero");
    b.forward = normalized(camera.view_dir);
    const Vec3 r = cross(b.forward, camera.up);
    require(norm(r) > 1e-9, "camera up vector must not be parallel to the view direction");
    b.right = normalized(r);
    b.up = cross(b.right, b.forward);
    require(camera.width_mm > 0.0 && camera.height_mm > 0.0, "camera extent must be positive");
    const Vec3 d = divide(b.forward, field.geometry().extent());
    b.dir_scale = norm(d);
    b.dir_normalized = d / b.dir_scale;
    return b;
}

PixelResult trace_pixel(const FieldView& field, const OrthoCamera& camera, const CameraBasis& basis, std::uint32_t u,
                        std::uint32_t v, std::uint32_t width, std::uint32_t height, const RaycastParams& params)
{
    const double su = (u + 0.5) / width - 0.5;
    const double sv = 0.5 - (v + 0.5) / height;
    const Vec3 origin_world = camera.center + basis.right * (su * camera.width_mm) + basis.up * (sv * camera.height_mm);
    const Vec3 origin = field.world_to_normalized(origin_world);

    PixelResult r;
    auto hit = raycast_iso(field, origin, basis.dir_normalized, params);
    if (!hit) {
        return r;
    }
    r.depth_mm = hit->t_hit / basis.dir_scale;
    r.label = field.label_at(hit->p_iso);
    // Gradient in index units -> world units.
    r.normal = normalized(divide(hit->eta, field.geometry().spacing));
    r.degenerate = hit->degenerate_normal;
    return r;
}

GroundTruthMaps allocate_maps(std::uint32_t width, std::uint32_t height)
{
    require(width >= 1 && height >= 1, "map resolution must be at least 1x1");
    GroundTruthMaps m;
    m.width = width;
    m.height = height;
    const std::size_t n = std::size_t(width) * height;
    m.depth_mm.assign(n, kDepthMiss);
    m.labels.assign(n, 0);
    m.normals.assign(n, Vec3{});
    return m;
}

} // namespace burrsim::detail
