#pragma once

#include "burrsim/core/vec.hpp"
#include "burrsim/volume/volume.hpp"

#include <cstdint>
#include <optional>

namespace burrsim {

// Read-only sampling view over either volume kind, in normalized volume coordinates: the unit cube
// [0,1]^3 covers the whole grid and voxel (i,j,k) has its centre at ((i+.5)/c_x, (j+.5)/c_y, (k+.5)/c_z).
// Labeled volumes sample occupancy (label != 0 -> 1.0). Out-of-range lookups clamp to the edge.
class FieldView {
public:
    explicit FieldView(const LabeledVolume& vol) noexcept;
    explicit FieldView(const IntensityVolume& vol) noexcept;

    [[nodiscard]] const GridGeometry& geometry() const noexcept { return *geometry_; }
    [[nodiscard]] const Dims& dims() const noexcept { return geometry_->dims; }
    [[nodiscard]] bool labeled() const noexcept { return labels_ != nullptr; }

    [[nodiscard]] double voxel(long long i, long long j, long long k) const noexcept;
    // Trilinear sample; sets *clamped when any tap fell outside the grid.
    [[nodiscard]] double sample(Vec3 p, bool* clamped = nullptr) const noexcept;
    // Label occupancy of the containing voxel, or density >= iso value.
    [[nodiscard]] bool inside(Vec3 p) const noexcept;
    // Label of the voxel containing p (0 outside the grid or for intensity volumes).
    [[nodiscard]] Label label_at(Vec3 p) const noexcept;

    [[nodiscard]] Vec3 world_to_normalized(Vec3 world) const noexcept;
    [[nodiscard]] Vec3 normalized_to_world(Vec3 p) const noexcept;

private:
    const GridGeometry* geometry_;
    const Label* labels_ = nullptr;
    const double* values_ = nullptr;
    double iso_ = 0.5;
};

struct SmoothingKernel {
    int N = 3;
    // (N-1)/2 on every axis.
    Vec3 delta_p;
    // One voxel step per axis in normalized coordinates: 1 / dims.
    Vec3 phi;

    // N must be odd and >= 1.
    static SmoothingKernel make(int N, const Dims& dims);
};

struct GradientSample {
    Vec3 value;
    bool clamped = false;
};

// Instrumentation for the smoothing loop.
struct NormalStats {
    std::uint64_t gradient_evaluations = 0;
    std::uint64_t clamped_evaluations = 0;
};

// Central difference, one voxel each way, halved: g_d = (f(p + phi_d e_d) - f(p - phi_d e_d)) / 2.
GradientSample raw_gradient(const FieldView& field, Vec3 p, NormalStats* stats = nullptr) noexcept;

// normalize(sum of raw_gradient over the N^3 lattice offsets around p_iso).
// Throws DegenerateNormal when the accumulated gradient is zero.
Vec3 smoothed_normal(const FieldView& field, Vec3 p_iso, const SmoothingKernel& kernel, NormalStats* stats = nullptr);

struct RaycastParams {
    // Marching step in normalized units; <= 0 selects min(phi)/2.
    double step = 0.0;
    int bisect_iters = 8;
    int kernel_n = 3;
};

struct RayHit {
    Vec3 p_iso;
    double t_hit = 0.0;
    Vec3 eta;
    // Smoothed gradient vanished; eta is the ray direction.
    bool degenerate_normal = false;
};

// Marches `origin + t * dir` (normalized coordinates, unit `dir`) through the unit cube until the
// inside predicate flips, then bisects the bracketing interval `bisect_iters` times.
std::optional<RayHit> raycast_iso(const FieldView& field, Vec3 origin, Vec3 dir, const RaycastParams& params = {},
                                  NormalStats* stats = nullptr);

} // namespace burrsim
