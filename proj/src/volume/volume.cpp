#include "burrsim/volume/volume.hpp"

#include "burrsim/core/hash.hpp"
#include "burrsim/core/errors.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <set>

namespace burrsim {

void SegmentTable::add(Label label, Segment segment)
{
    if (label == 0) {
        fail(ErrorKind::Conflict, "segment label 0 is reserved for air");
    }
    if (entries_.contains(label)) {
        fail(ErrorKind::Conflict, "duplicate segment label " + std::to_string(label));
    }
    for (const auto& [other, seg] : entries_) {
        if (seg.name == segment.name) {
            fail(ErrorKind::Conflict, "duplicate segment name '" + segment.name + "' (labels " +
                                          std::to_string(other) + " and " + std::to_string(label) + ")");
        }
    }
    entries_.emplace(label, std::move(segment));
}

const Segment* SegmentTable::find(Label label) const noexcept
{
    auto it = entries_.find(label);
    return it == entries_.end() ? nullptr : &it->second;
}

void SegmentTable::set_sensitive(Label label, bool sensitive)
{
    auto it = entries_.find(label);
    if (it == entries_.end()) {
        fail(ErrorKind::Validation, "no segment with label " + std::to_string(label));
    }
    it->second.sensitive = sensitive;
}

void GridGeometry::validate() const
{
    require(dims.x >= 1 && dims.y >= 1 && dims.z >= 1, "volume dims must be >= 1 on every axis");
    for (std::size_t d = 0; d < 3; ++d) {
        require(std::isfinite(spacing[d]) && spacing[d] > 0.0, "volume spacing must be finite and > 0");
        require(std::isfinite(origin[d]), "volume origin must be finite");
    }
}

VoxelIndex GridGeometry::unlinear(std::size_t n) const noexcept
{
    const std::size_t plane = static_cast<std::size_t>(dims.x) * dims.y;
    const auto k = static_cast<std::uint32_t>(n / plane);
    const std::size_t rem = n % plane;
    return {static_cast<std::uint32_t>(rem % dims.x), static_cast<std::uint32_t>(rem / dims.x), k};
}

bool GridGeometry::in_bounds(Vec3 c) const noexcept
{
    for (std::size_t d = 0; d < 3; ++d) {
        const double r = std::round(c[d]);
        if (!(r >= 0.0 && r < static_cast<double>(dims[d]))) {
            return false;
        }
    }
    return true;
}

LabeledVolume::LabeledVolume(GridGeometry geometry, std::vector<Label> labels, SegmentTable segments)
    : geometry_(geometry), labels_(std::move(labels)), segments_(std::move(segments))
{
    geometry_.validate();
    require(labels_.size() == geometry_.dims.count(),
            "label array length " + std::to_string(labels_.size()) + " != dims product " +
                std::to_string(geometry_.dims.count()));
    std::set<Label> seen;
    for (Label l : labels_) {
        if (l != 0) {
            seen.insert(l);
        }
    }
    for (Label l : seen) {
        require(segments_.contains(l), "label " + std::to_string(l) + " present in volume but not in segment table");
    }
}

LabeledVolume::LabeledVolume(GridGeometry geometry, SegmentTable segments)
    : LabeledVolume(geometry, std::vector<Label>(geometry.dims.count(), 0), std::move(segments))
{
}

void LabeledVolume::set(VoxelIndex v, Label label)
{
    require(geometry_.in_bounds(v), "voxel index out of bounds");
    require(label == 0 || segments_.contains(label), "label " + std::to_string(label) + " not in segment table");
    labels_[geometry_.linear(v)] = label;
}

std::size_t LabeledVolume::count_nonzero() const noexcept
{
    std::size_t n = 0;
    for (Label l : labels_) {
        n += l != 0 ? 1 : 0;
    }
    return n;
}

std::map<Label, std::size_t> LabeledVolume::label_histogram() const
{
    std::map<Label, std::size_t> h;
    for (Label l : labels_) {
        if (l != 0) {
            ++h[l];
        }
    }
    return h;
}

void IntensityVolume::validate() const
{
    geometry.validate();
    require(values.size() == geometry.dims.count(), "intensity array length does not match dims");
    require(iso_value > 0.0 && iso_value < 1.0, "iso_value must lie strictly inside (0,1)");
    for (double v : values) {
        require(std::isfinite(v), "intensity values must be finite");
    }
}

std::uint64_t grid_digest(const GridGeometry& geometry, std::span<const Label> labels) noexcept
{
    std::uint64_t h = kFnvOffset;
    fnv_value<std::uint64_t>(h, geometry.dims.x);
    fnv_value<std::uint64_t>(h, geometry.dims.y);
    fnv_value<std::uint64_t>(h, geometry.dims.z);
    for (std::size_t d = 0; d < 3; ++d) {
        fnv_value<std::uint64_t>(h, std::bit_cast<std::uint64_t>(geometry.spacing[d]));
    }
    fnv_bytes(h, labels.data(), labels.size_bytes());
    return h;
}

std::string digest_hex(std::uint64_t digest)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

std::uint64_t parse_digest_hex(const std::string& text)
{
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 16);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.size() != 16) {
        fail(ErrorKind::Parse, "bad digest '" + text + "'");
    }
    return v;
}

} // namespace burrsim
