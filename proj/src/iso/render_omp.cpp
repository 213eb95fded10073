#include "burrsim/iso/render.hpp"
#include "burrsim/core/errors.hpp"

#include "pixel_kernel.hpp"

#include <cstdint>

namespace burrsim {

GroundTruthMaps render_ortho_maps(const LabeledVolume& vol, const OrthoCamera& camera, std::uint32_t width,
                                  std::uint32_t height, const RaycastParams& params)
{
    GroundTruthMaps maps = detail::allocate_maps(width, height);
    const FieldView field(vol);
    const detail::CameraBasis basis = detail::make_basis(field, camera);
    // raycast_iso validates its arguments up front; do it once here so no exception escapes the region.
    require(params.bisect_iters >= 0, "bisection iteration count must be >= 0");
    (void)SmoothingKernel::make(params.kernel_n, vol.dims());

    const std::int64_t pixels = std::int64_t(width) * height;
    std::uint64_t degenerate = 0;
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : degenerate)
    for (std::int64_t n = 0; n < pixels; ++n) {
        const auto u = static_cast<std::uint32_t>(n % width);
        const auto v = static_cast<std::uint32_t>(n / width);
        const auto r = detail::trace_pixel(field, camera, basis, u, v, width, height, params);
        detail::store(maps, static_cast<std::size_t>(n), r);
        degenerate += r.degenerate ? 1 : 0;
    }
    maps.degenerate_normals = degenerate;
    return maps;
}

std::vector<Vec3> smoothed_normals(const FieldView& field, std::span<const Vec3> points, const SmoothingKernel& kernel,
                                   NormalStats* stats)
{
    std::vector<Vec3> out(points.size());
    std::uint64_t evals = 0;
    std::uint64_t clamped = 0;
    const auto count = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(static) reduction(+ : evals, clamped)
    for (std::int64_t n = 0; n < count; ++n) {
        NormalStats local;
        try {
            out[n] = smoothed_normal(field, points[n], kernel, &local);
        } catch (const Error&) {
            out[n] = Vec3{};
        }
        evals += local.gradient_evaluations;
        clamped += local.clamped_evaluations;
    }
    if (stats) {
        stats->gradient_evaluations += evals;
        stats->clamped_evaluations += clamped;
    }
    return out;
}

} // namespace burrsim
