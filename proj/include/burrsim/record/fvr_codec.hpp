#pragma once

// FVR1 batch-file codec. docs/FVR1.md documents the byte layout.

#include "burrsim/record/events.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace burrsim::fvr {

inline constexpr std::array<std::uint8_t, 4> kMagic{'F', 'V', 'R', '1'};
inline constexpr std::array<std::uint8_t, 4> kFooterMagic{'1', 'R', 'V', 'F'};
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::uint8_t kCodecShuffleDeflate = 1;
inline constexpr std::uint8_t kCodecStoredDeflate = 2;

struct BlockInfo {
    EventGroup group = EventGroup::Sequence;
    std::uint64_t offset = 0;
    std::uint32_t record_count = 0;
};

struct DecodedBatch {
    std::uint32_t batch_index = 0;
    std::string meta_text;
    std::vector<EventRecord> events;
    double t_min = 0.0;
    double t_max = 0.0;
    std::vector<BlockInfo> blocks;
};

// Events must be non-empty and time-ordered.
std::vector<std::uint8_t> encode_batch(std::uint32_t batch_index, const std::string& meta_text,
                                       const std::vector<EventRecord>& events);

// Raises Corruption (naming `label`) on any checksum or structural failure.
DecodedBatch decode_batch(std::span<const std::uint8_t> bytes, const std::string& label = "batch");

} // namespace burrsim::fvr
