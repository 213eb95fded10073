#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace burrsim {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double operator[](std::size_t d) const noexcept { return d == 0 ? x : (d == 1 ? y : z); }
    constexpr double& operator[](std::size_t d) noexcept { return d == 0 ? x : (d == 1 ? y : z); }

    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
constexpr Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
constexpr Vec3 operator-(Vec3 a) noexcept { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double s) noexcept { return {a.x * s, a.y * s, a.z * s}; }
constexpr Vec3 operator*(double s, Vec3 a) noexcept { return a * s; }
constexpr Vec3 operator/(Vec3 a, double s) noexcept { return {a.x / s, a.y / s, a.z / s}; }
constexpr Vec3& operator+=(Vec3& a, Vec3 b) noexcept { a = a + b; return a; }
constexpr Vec3& operator-=(Vec3& a, Vec3 b) noexcept { a = a - b; return a; }

// Component-wise (Hadamard) product and quotient.
constexpr Vec3 hadamard(Vec3 a, Vec3 b) noexcept { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
constexpr Vec3 divide(Vec3 a, Vec3 b) noexcept { return {a.x / b.x, a.y / b.y, a.z / b.z}; }

constexpr double dot(Vec3 a, Vec3 b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) noexcept
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) noexcept { return std::sqrt(dot(a, a)); }
constexpr double norm_squared(Vec3 a) noexcept { return dot(a, a); }
inline double max_abs(Vec3 a) noexcept { return std::fmax(std::fabs(a.x), std::fmax(std::fabs(a.y), std::fabs(a.z))); }
constexpr double min_component(Vec3 a) noexcept { return a.x < a.y ? (a.x < a.z ? a.x : a.z) : (a.y < a.z ? a.y : a.z); }

// Returns the zero vector when `a` has zero length.
inline Vec3 normalized(Vec3 a) noexcept
{
    const double n = norm(a);
    return n > 0.0 ? a / n : Vec3{};
}

// Angle in radians between two non-zero vectors.
inline double angle_between(Vec3 a, Vec3 b) noexcept
{
    const double c = dot(a, b) / (norm(a) * norm(b));
    return std::acos(std::fmax(-1.0, std::fmin(1.0, c)));
}

// Unit quaternion, scalar first.
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr bool operator==(const Quat&, const Quat&) = default;
};

inline double norm(const Quat& q) noexcept { return std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z); }
bool is_unit(const Quat& q, double tol = 1e-6) noexcept;
Quat normalized(const Quat& q) noexcept;
// Spherical interpolation along the shorter arc; falls back to normalized lerp for nearly parallel inputs.
Quat slerp(const Quat& a, const Quat& b, double u) noexcept;

struct Pose {
    Vec3 position;
    Quat orientation;

    friend constexpr bool operator==(const Pose&, const Pose&) = default;
};

} // namespace burrsim
