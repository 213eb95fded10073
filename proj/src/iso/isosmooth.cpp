#include "burrsim/iso/isosmooth.hpp"

#include "burrsim/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace burrsim {

FieldView::FieldView(const LabeledVolume& vol) noexcept : geometry_(&vol.geometry()), labels_(vol.labels().data()) {}

FieldView::FieldView(const IntensityVolume& vol) noexcept
    : geometry_(&vol.geometry), values_(vol.values.data()), iso_(vol.iso_value)
{
}

double FieldView::voxel(long long i, long long j, long long k) const noexcept
{
    const Dims& d = geometry_->dims;
    i = std::clamp<long long>(i, 0, d.x - 1);
    j = std::clamp<long long>(j, 0, d.y - 1);
    k = std::clamp<long long>(k, 0, d.z - 1);
    const std::size_t n = geometry_->linear(std::uint32_t(i), std::uint32_t(j), std::uint32_t(k));
    if (labels_) {
        return labels_[n] != 0 ? 1.0 : 0.0;
    }
    return values_[n];
}

double FieldView::sample(Vec3 p, bool* clamped) const noexcept
{
    const Dims& d = geometry_->dims;
    std::array<long long, 3> i0{};
    std::array<double, 3> frac{};
    bool out = false;
    for (std::size_t a = 0; a < 3; ++a) {
        const double u = p[a] * static_cast<double>(d[a]) - 0.5;
        const double fl = std::floor(u);
        i0[a] = static_cast<long long>(fl);
        frac[a] = u - fl;
        if (i0[a] < 0 || i0[a] + 1 > static_cast<long long>(d[a]) - 1) {
            // Taps with zero weight do not count as clamped.
            if (i0[a] < 0 || frac[a] > 0.0) {
                out = true;
            }
        }
    }
    if (clamped && out) {
        *clamped = true;
    }
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
        const int dx = c & 1;
        const int dy = (c >> 1) & 1;
        const int dz = (c >> 2) & 1;
        const double w = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) *
                         (dz ? frac[2] : 1.0 - frac[2]);
        if (w != 0.0) {
            acc += w * voxel(i0[0] + dx, i0[1] + dy, i0[2] + dz);
        }
    }
    return acc;
}

bool FieldView::inside(Vec3 p) const noexcept
{
    if (labels_) {
        return label_at(p) != 0;
    }
    return sample(p) >= iso_;
}

Label FieldView::label_at(Vec3 p) const noexcept
{
    if (!labels_) {
        return 0;
    }
    const Dims& d = geometry_->dims;
    std::array<std::uint32_t, 3> idx{};
    for (std::size_t a = 0; a < 3; ++a) {
        const double u = std::floor(p[a] * static_cast<double>(d[a]));
        if (!(u >= 0.0)) {
            return 0;
        }
        // p == 1.0 exactly belongs to the last voxel.
        idx[a] = static_cast<std::uint32_t>(std::min(u, static_cast<double>(d[a]) - 1.0));
        if (p[a] > 1.0) {
            return 0;
        }
    }
    return labels_[geometry_->linear(idx[0], idx[1], idx[2])];
}

Vec3 FieldView::world_to_normalized(Vec3 world) const noexcept
{
    return divide(world - geometry_->origin + geometry_->spacing * 0.5, geometry_->extent());
}

Vec3 FieldView::normalized_to_world(Vec3 p) const noexcept
{
    return hadamard(p, geometry_->extent()) + geometry_->origin - geometry_->spacing * 0.5;
}

SmoothingKernel SmoothingKernel::make(int N, const Dims& dims)
{
    require(N >= 1 && N % 2 == 1, "smoothing sample threshold N must be odd and >= 1");
    SmoothingKernel k;
    k.N = N;
    const double half = (N - 1) / 2.0;
    k.delta_p = {half, half, half};
    k.phi = {1.0 / dims.x, 1.0 / dims.y, 1.0 / dims.z};
    return k;
}

GradientSample raw_gradient(const FieldView& field, Vec3 p, NormalStats* stats) noexcept
{
    const Dims& d = field.dims();
    const Vec3 phi{1.0 / d.x, 1.0 / d.y, 1.0 / d.z};
    GradientSample g;
    for (std::size_t a = 0; a < 3; ++a) {
        Vec3 step;
        step[a] = phi[a];
        g.value[a] = (field.sample(p + step, &g.clamped) - field.sample(p - step, &g.clamped)) / 2.0;
    }
    if (stats) {
        ++stats->gradient_evaluations;
        if (g.clamped) {
            ++stats->clamped_evaluations;
        }
    }
    return g;
}

Vec3 smoothed_normal(const FieldView& field, Vec3 p_iso, const SmoothingKernel& kernel, NormalStats* stats)
{
    Vec3 eta;
    for (int x = 0; x < kernel.N; ++x) {
        for (int y = 0; y < kernel.N; ++y) {
            for (int z = 0; z < kernel.N; ++z) {
                const Vec3 offset{double(x), double(y), double(z)};
                const Vec3 p_sample = p_iso + hadamard(offset - kernel.delta_p, kernel.phi);
                eta += raw_gradient(field, p_sample, stats).value;
            }
        }
    }
    const double n = norm(eta);
    if (!(n > 0.0)) {
        fail(ErrorKind::DegenerateNormal, "accumulated gradient vanished at the iso-surface point");
    }
    return eta / n;
}

namespace {

// Parametric overlap of the ray with [0,1]^3; nullopt when it misses.
std::optional<std::pair<double, double>> clip_to_unit_cube(Vec3 o, Vec3 d) noexcept
{
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (o[a] < 0.0 || o[a] > 1.0) {
                return std::nullopt;
            }
            continue;
        }
        double ta = (0.0 - o[a]) / d[a];
        double tb = (1.0 - o[a]) / d[a];
        if (ta > tb) {
            std::swap(ta, tb);
        }
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    t0 = std::max(t0, 0.0);
    if (t0 > t1) {
        return std::nullopt;
    }
    return std::make_pair(t0, t1);
}

Vec3 clamp_unit(Vec3 p) noexcept
{
    return {std::clamp(p.x, 0.0, 1.0), std::clamp(p.y, 0.0, 1.0), std::clamp(p.z, 0.0, 1.0)};
}

} // namespace

std::optional<RayHit> raycast_iso(const FieldView& field, Vec3 origin, Vec3 dir, const RaycastParams& params,
                                  NormalStats* stats)
{
    require(std::fabs(norm(dir) - 1.0) <= 1e-6, "ray direction must be unit length");
    require(params.bisect_iters >= 0, "bisection iteration count must be >= 0");
    const Dims& d = field.dims();
    const double step = params.step > 0.0 ? params.step : min_component(Vec3{1.0 / d.x, 1.0 / d.y, 1.0 / d.z}) / 2.0;

    auto span = clip_to_unit_cube(origin, dir);
    if (!span) {
        return std::nullopt;
    }
    const auto [t_enter, t_exit] = *span;

    double t_hit = 0.0;
    bool found = false;
    if (field.inside(clamp_unit(origin + dir * t_enter))) {
        t_hit = t_enter;
        found = true;
    } else {
        double t_prev = t_enter;
        for (std::uint64_t n = 1;; ++n) {
            double t = t_enter + static_cast<double>(n) * step;
            const bool last = t >= t_exit;
            if (last) {
                t = t_exit;
            }
            if (field.inside(clamp_unit(origin + dir * t))) {
                double lo = t_prev;
                double hi = t;
                for (int it = 0; it < params.bisect_iters; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (field.inside(clamp_unit(origin + dir * mid))) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                t_hit = hi;
                found = true;
                break;
            }
            if (last) {
                break;
            }
            t_prev = t;
        }
    }
    if (!found) {
        return std::nullopt;
    }

    RayHit hit;
    hit.t_hit = t_hit;
    hit.p_iso = clamp_unit(origin + dir * t_hit);
    try {
        hit.eta = smoothed_normal(field, hit.p_iso, SmoothingKernel::make(params.kernel_n, d), stats);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateNormal) {
            throw;
        }
        hit.eta = dir;
        hit.degenerate_normal = true;
    }
    return hit;
}

} // namespace burrsim
