#pragma once

#include "burrsim/core/vec.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace burrsim {

using Label = std::uint16_t;

struct Dims {
    std::uint32_t x = 1;
    std::uint32_t y = 1;
    std::uint32_t z = 1;

    [[nodiscard]] constexpr std::uint32_t operator[](std::size_t d) const noexcept { return d == 0 ? x : (d == 1 ? y : z); }
    [[nodiscard]] constexpr std::size_t count() const noexcept
    {
        return static_cast<std::size_t>(x) * static_cast<std::size_t>(y) * static_cast<std::size_t>(z);
    }

    friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

// Lexicographic on (i, j, k).
struct VoxelIndex {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    std::uint32_t k = 0;

    friend constexpr auto operator<=>(const VoxelIndex&, const VoxelIndex&) = default;
};

struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kDefaultSegmentColor{0.8, 0.8, 0.7};

struct Segment {
    std::string name;
    Rgb color = kDefaultSegmentColor;
    bool sensitive = false;

    friend bool operator==(const Segment&, const Segment&) = default;
};

// Label value -> segment description. Label 0 (air) is never a key and names are unique.
class SegmentTable {
public:
    SegmentTable() = default;

    // Throws Conflict on label 0, a duplicate label or a duplicate name.
    void add(Label label, Segment segment);

    [[nodiscard]] const Segment* find(Label label) const noexcept;
    [[nodiscard]] bool contains(Label label) const noexcept { return entries_.contains(label); }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    [[nodiscard]] const std::map<Label, Segment>& entries() const noexcept { return entries_; }

    void set_sensitive(Label label, bool sensitive);

    friend bool operator==(const SegmentTable&, const SegmentTable&) = default;

private:
    std::map<Label, Segment> entries_;
};

// Placement of a voxel grid in world millimetres. `origin` is the world position of the
// centre of voxel (0,0,0).
struct GridGeometry {
    Dims dims;
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin;

    void validate() const;

    [[nodiscard]] std::size_t linear(std::uint32_t i, std::uint32_t j, std::uint32_t k) const noexcept
    {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims.x) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims.y) * k);
    }
    [[nodiscard]] std::size_t linear(VoxelIndex v) const noexcept { return linear(v.i, v.j, v.k); }
    [[nodiscard]] VoxelIndex unlinear(std::size_t n) const noexcept;

    [[nodiscard]] bool in_bounds(VoxelIndex v) const noexcept { return v.i < dims.x && v.j < dims.y && v.k < dims.z; }
    // True when continuous voxel coordinates round to a voxel inside the grid.
    [[nodiscard]] bool in_bounds(Vec3 voxel_coords) const noexcept;

    [[nodiscard]] Vec3 voxel_to_world(Vec3 voxel_coords) const noexcept { return origin + hadamard(voxel_coords, spacing); }
    [[nodiscard]] Vec3 voxel_to_world(VoxelIndex v) const noexcept
    {
        return voxel_to_world(Vec3{double(v.i), double(v.j), double(v.k)});
    }
    [[nodiscard]] Vec3 world_to_voxel(Vec3 world) const noexcept { return divide(world - origin, spacing); }

    // World-space size of the box spanned by all voxels (dims * spacing).
    [[nodiscard]] Vec3 extent() const noexcept { return hadamard(Vec3{double(dims.x), double(dims.y), double(dims.z)}, spacing); }
    [[nodiscard]] double voxel_volume() const noexcept { return spacing.x * spacing.y * spacing.z; }

    friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

class LabeledVolume {
public:
    LabeledVolume() = default;
    // Throws Contract when the array size does not match or a label has no table entry.
    LabeledVolume(GridGeometry geometry, std::vector<Label> labels, SegmentTable segments);
    // All-air volume.
    LabeledVolume(GridGeometry geometry, SegmentTable segments);

    [[nodiscard]] const GridGeometry& geometry() const noexcept { return geometry_; }
    [[nodiscard]] const Dims& dims() const noexcept { return geometry_.dims; }
    [[nodiscard]] const SegmentTable& segments() const noexcept { return segments_; }
    SegmentTable& segments() noexcept { return segments_; }

    [[nodiscard]] Label at(std::uint32_t i, std::uint32_t j, std::uint32_t k) const noexcept
    {
        return labels_[geometry_.linear(i, j, k)];
    }
    [[nodiscard]] Label at(VoxelIndex v) const noexcept { return labels_[geometry_.linear(v)]; }
    [[nodiscard]] std::span<const Label> labels() const noexcept { return labels_; }

    // The only mutators; callers own exclusive access.
    void set(VoxelIndex v, Label label);
    void clear(VoxelIndex v) noexcept { labels_[geometry_.linear(v)] = 0; }

    [[nodiscard]] std::size_t count_nonzero() const noexcept;
    [[nodiscard]] std::map<Label, std::size_t> label_histogram() const;

    friend bool operator==(const LabeledVolume&, const LabeledVolume&) = default;

private:
    GridGeometry geometry_;
    std::vector<Label> labels_ = std::vector<Label>(1, 0);
    SegmentTable segments_;
};

// Density volume; `values` are normalized to [0,1].
struct IntensityVolume {
    GridGeometry geometry;
    std::vector<double> values;
    double iso_value = 0.5;

    void validate() const;
    [[nodiscard]] double at(std::uint32_t i, std::uint32_t j, std::uint32_t k) const noexcept
    {
        return values[geometry.linear(i, j, k)];
    }
};

// FNV-1a over dims, spacing bits and the label array (all little-endian).
std::uint64_t grid_digest(const GridGeometry& geometry, std::span<const Label> labels) noexcept;
inline std::uint64_t grid_digest(const LabeledVolume& vol) noexcept { return grid_digest(vol.geometry(), vol.labels()); }

std::string digest_hex(std::uint64_t digest);
std::uint64_t parse_digest_hex(const std::string& text);

} // namespace burrsim
