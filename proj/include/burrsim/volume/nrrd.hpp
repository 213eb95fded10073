#pragma once

#include "burrsim/volume/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace burrsim {

// Supported subset: 3D, little-endian, raw or gzip payload, attached data only.
enum class NrrdType { UInt8, UInt16, Int16, Float32 };
enum class NrrdEncoding { Raw, Gzip };

std::string_view to_string(NrrdType type) noexcept;
std::string_view to_string(NrrdEncoding encoding) noexcept;

struct NrrdHeader {
    int format_version = 4;
    // Field descriptors ("key: value"), keys lower-cased.
    std::map<std::string, std::string> fields;
    // Key/value pairs ("key:=value"), keys verbatim.
    std::map<std::string, std::string> key_values;
    std::size_t payload_offset = 0;
};

using ParsedVolume = std::variant<IntensityVolume, LabeledVolume>;

// Header only; raises Parse naming the offending line or field.
NrrdHeader parse_nrrd_header(std::span<const std::uint8_t> bytes);

// Integer data carrying "Segment0_*" keys becomes a LabeledVolume; everything else an
// IntensityVolume normalized to [0,1].
ParsedVolume parse_nrrd(std::span<const std::uint8_t> bytes);
ParsedVolume read_nrrd(const std::filesystem::path& path);

// Reads 3D Slicer's "Segment<N>_Name/_LabelValue/_Color" keys for N = 0,1,2,... until the
// first gap.
SegmentTable parse_seg_metadata(const std::map<std::string, std::string>& key_values);

std::vector<std::uint8_t> write_nrrd(const LabeledVolume& vol, NrrdType type = NrrdType::UInt16,
                                     NrrdEncoding encoding = NrrdEncoding::Gzip);
// Integer types quantize value * max(type); float32 stores values directly.
std::vector<std::uint8_t> write_nrrd(const IntensityVolume& vol, NrrdType type = NrrdType::Float32,
                                     NrrdEncoding encoding = NrrdEncoding::Gzip);

// Binarizes an intensity volume at its iso value into a single-segment label map.
LabeledVolume threshold_to_labels(const IntensityVolume& vol, const std::string& segment_name = "Bone");

} // namespace burrsim
