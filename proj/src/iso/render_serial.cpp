// Serial reference implementations. Kept deliberately plain: the OpenMP kernels in
// render_omp.cpp are tested for bit-identity against these.

#include "burrsim/iso/render.hpp"
#include "burrsim/core/errors.hpp"

#include "pixel_kernel.hpp"

namespace burrsim {

GroundTruthMaps render_ortho_maps_serial(const LabeledVolume& vol, const OrthoCamera& camera, std::uint32_t width,
                                         std::uint32_t height, const RaycastParams& params)
{
    GroundTruthMaps maps = detail::allocate_maps(width, height);
    const FieldView field(vol);
    const detail::CameraBasis basis = detail::make_basis(field, camera);
    for (std::uint32_t v = 0; v < height; ++v) {
        for (std::uint32_t u = 0; u < width; ++u) {
            const auto r = detail::trace_pixel(field, camera, basis, u, v, width, height, params);
            detail::store(maps, std::size_t(v) * width + u, r);
            maps.degenerate_normals += r.degenerate ? 1 : 0;
        }
    }
    return maps;
}

std::vector<Vec3> smoothed_normals_serial(const FieldView& field, std::span<const Vec3> points,
                                          const SmoothingKernel& kernel, NormalStats* stats)
{
    std::vector<Vec3> out(points.size());
    for (std::size_t n = 0; n < points.size(); ++n) {
        try {
            out[n] = smoothed_normal(field, points[n], kernel, stats);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateNormal) {
                throw;
            }
        }
    }
    return out;
}

} // namespace burrsim
