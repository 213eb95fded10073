#include "burrsim/record/fvr_codec.hpp"

#include "burrsim/core/bytes.hpp"
#include "burrsim/core/compress.hpp"
#include "burrsim/core/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

namespace burrsim::fvr {

namespace {

enum class Col : std::uint8_t { F64, F32, U64, U32, U16, U8 };

constexpr std::size_t col_width(Col c) noexcept
{
    switch (c) {
    case Col::F64:
    case Col::U64: return 8;
    case Col::F32:
    case Col::U32: return 4;
    case Col::U16: return 2;
    case Col::U8: return 1;
    }
    return 0;
}

std::vector<Col> schema(EventGroup g)
{
    switch (g) {
    case EventGroup::Sequence: return {Col::U8};
    case EventGroup::VoxelsRemoved:
        return {Col::F64, Col::U32, Col::U32, Col::U32, Col::U16, Col::F32, Col::F32, Col::F32};
    case EventGroup::ForceFeedback: return {Col::F64, Col::F64, Col::F64, Col::F64};
    case EventGroup::BurrChange: return {Col::F64, Col::F64, Col::U8};
    case EventGroup::Kinematics: return std::vector<Col>(15, Col::F64);
    case EventGroup::DepthFrames: return {Col::F64, Col::U32, Col::U32, Col::U64};
    default: return {};
    }
}

std::uint64_t f64_bits(double v) { return std::bit_cast<std::uint64_t>(v); }
double bits_f64(std::uint64_t b) { return std::bit_cast<double>(b); }
std::uint64_t f32_bits(float v) { return std::bit_cast<std::uint32_t>(v); }
float bits_f32(std::uint64_t b) { return std::bit_cast<float>(static_cast<std::uint32_t>(b)); }

// Linear extrapolation from the two previous values; falls back to the previous value when the
// extrapolation would leave the finite range.
std::uint64_t predict_f64(const std::vector<std::uint64_t>& xs, std::size_t n)
{
    if (n == 0) {
        return 0;
    }
    if (n == 1) {
        return xs[0];
    }
    const double a = bits_f64(xs[n - 1]);
    const double b = bits_f64(xs[n - 2]);
    if (!std::isfinite(a) || !std::isfinite(b)) {
        return xs[n - 1];
    }
    const double p = 2.0 * a - b;
    return std::isfinite(p) ? f64_bits(p) : xs[n - 1];
}

std::uint64_t width_mask(Col c)
{
    const std::size_t w = col_width(c);
    return w == 8 ? ~0ull : ((1ull << (8 * w)) - 1);
}

// Column values (raw bits) -> residuals.
void forward_predict(Col c, const std::vector<std::uint64_t>& xs, std::vector<std::uint64_t>& out)
{
    out.resize(xs.size());
    const std::uint64_t mask = width_mask(c);
    for (std::size_t n = 0; n < xs.size(); ++n) {
        switch (c) {
        case Col::F64: out[n] = xs[n] ^ predict_f64(xs, n); break;
        case Col::F32: out[n] = xs[n] ^ (n ? xs[n - 1] : 0); break;
        case Col::U64:
        case Col::U32:
        case Col::U16: out[n] = (xs[n] - (n ? xs[n - 1] : 0)) & mask; break;
        case Col::U8: out[n] = xs[n]; break;
        }
    }
}

void inverse_predict(Col c, const std::vector<std::uint64_t>& residuals, std::vector<std::uint64_t>& xs)
{
    xs.resize(residuals.size());
    const std::uint64_t mask = width_mask(c);
    for (std::size_t n = 0; n < residuals.size(); ++n) {
        switch (c) {
        case Col::F64: xs[n] = residuals[n] ^ predict_f64(xs, n); break;
        case Col::F32: xs[n] = residuals[n] ^ (n ? xs[n - 1] : 0); break;
        case Col::U64:
        case Col::U32:
        case Col::U16: xs[n] = (residuals[n] + (n ? xs[n - 1] : 0)) & mask; break;
        case Col::U8: xs[n] = residuals[n]; break;
        }
    }
}

// Columns are laid out one after another; within a column, byte plane b holds byte b of every
// record's residual.
std::vector<std::uint8_t> shuffle_columns(const std::vector<Col>& cols, const std::vector<std::vector<std::uint64_t>>& data,
                                          std::size_t count)
{
    std::size_t width = 0;
    for (Col c : cols) {
        width += col_width(c);
    }
    std::vector<std::uint8_t> raw(width * count);
    std::size_t off = 0;
    std::vector<std::uint64_t> residuals;
    for (std::size_t ci = 0; ci < cols.size(); ++ci) {
        forward_predict(cols[ci], data[ci], residuals);
        const std::size_t w = col_width(cols[ci]);
        for (std::size_t b = 0; b < w; ++b) {
            for (std::size_t n = 0; n < count; ++n) {
                raw[off + b * count + n] = static_cast<std::uint8_t>(residuals[n] >> (8 * b));
            }
        }
        off += w * count;
    }
    return raw;
}

std::vector<std::vector<std::uint64_t>> unshuffle_columns(const std::vector<Col>& cols,
                                                          std::span<const std::uint8_t> raw, std::size_t count)
{
    std::vector<std::vector<std::uint64_t>> data(cols.size());
    std::size_t off = 0;
    std::vector<std::uint64_t> residuals(count);
    for (std::size_t ci = 0; ci < cols.size(); ++ci) {
        const std::size_t w = col_width(cols[ci]);
        std::fill(residuals.begin(), residuals.end(), 0);
        for (std::size_t b = 0; b < w; ++b) {
            for (std::size_t n = 0; n < count; ++n) {
                residuals[n] |= std::uint64_t(raw[off + b * count + n]) << (8 * b);
            }
        }
        inverse_predict(cols[ci], residuals, data[ci]);
        off += w * count;
    }
    return data;
}

struct GroupColumns {
    std::vector<std::vector<std::uint64_t>> cols;
    std::size_t count = 0;

    void push(std::initializer_list<std::uint64_t> values)
    {
        if (cols.empty()) {
            cols.resize(values.size());
        }
        std::size_t i = 0;
        for (auto v : values) {
            cols[i++].push_back(v);
        }
        ++count;
    }
};

void put_block(ByteWriter& w, std::vector<BlockInfo>& index, EventGroup g, std::uint8_t codec, std::size_t rec_width,
               std::size_t count, std::span<const std::uint8_t> raw)
{
    const auto comp = deflate_raw(raw, 6);
    require(raw.size() <= 0xFFFFFFFFu && comp.size() <= 0xFFFFFFFFu && count <= 0xFFFFFFFFu,
            "FVR1 block exceeds 4 GiB; use a smaller batch size");
    index.push_back({g, w.size(), static_cast<std::uint32_t>(count)});
    w.put<std::uint8_t>(static_cast<std::uint8_t>(g));
    w.put<std::uint8_t>(codec);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(rec_width));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(count));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(raw.size()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(comp.size()));
    w.put<std::uint32_t>(crc32(comp));
    w.put_bytes(comp);
}

[[noreturn]] void corrupt(const std::string& label, const std::string& what)
{
    fail(ErrorKind::Corruption, label + ": " + what);
}

} // namespace

std::vector<std::uint8_t> encode_batch(std::uint32_t batch_index, const std::string& meta_text,
                                       const std::vector<EventRecord>& events)
{
    require(!events.empty(), "cannot encode an empty batch");
    std::map<EventGroup, GroupColumns> groups;
    std::vector<std::uint64_t> sequence;
    sequence.reserve(events.size());
    std::vector<std::uint8_t> blob;

    for (const auto& ev : events) {
        const EventGroup g = event_group(ev);
        sequence.push_back(static_cast<std::uint8_t>(g));
        GroupColumns& gc = groups[g];
        std::visit(
            [&](const auto& e) {
                using T = std::decay_t<decltype(e)>;
                if constexpr (std::is_same_v<T, VoxelRemovedEvent>) {
                    gc.push({f64_bits(e.t), e.index.i, e.index.j, e.index.k, e.label, f32_bits(e.color[0]),
                             f32_bits(e.color[1]), f32_bits(e.color[2])});
                } else if constexpr (std::is_same_v<T, ForceSampleEvent>) {
                    gc.push({f64_bits(e.t), f64_bits(e.force.x), f64_bits(e.force.y), f64_bits(e.force.z)});
                } else if constexpr (std::is_same_v<T, BurrChangeEvent>) {
                    gc.push({f64_bits(e.t), f64_bits(e.radius_mm), static_cast<std::uint8_t>(e.tip)});
                } else if constexpr (std::is_same_v<T, KinematicsEvent>) {
                    const Pose& d = e.drill;
                    const Pose& c = e.camera;
                    gc.push({f64_bits(e.t), f64_bits(d.position.x), f64_bits(d.position.y), f64_bits(d.position.z),
                             f64_bits(d.orientation.w), f64_bits(d.orientation.x), f64_bits(d.orientation.y),
                             f64_bits(d.orientation.z), f64_bits(c.position.x), f64_bits(c.position.y),
                             f64_bits(c.position.z), f64_bits(c.orientation.w), f64_bits(c.orientation.x),
                             f64_bits(c.orientation.y), f64_bits(c.orientation.z)});
                } else {
                    const std::size_t px = std::size_t(e.width) * e.height;
                    require(e.depth_mm.size() == px && e.labels.size() == px,
                            "depth frame payload does not match its width x height");
                    gc.push({f64_bits(e.t), e.width, e.height, blob.size()});
                    const auto* d = reinterpret_cast<const std::uint8_t*>(e.depth_mm.data());
                    blob.insert(blob.end(), d, d + px * sizeof(float));
                    const auto* l = reinterpret_cast<const std::uint8_t*>(e.labels.data());
                    blob.insert(blob.end(), l, l + px * sizeof(Label));
                }
            },
            ev);
    }

    ByteWriter w;
    w.put_bytes(kMagic);
    w.put<std::uint16_t>(kFormatVersion);
    w.put<std::uint16_t>(0);
    w.put<std::uint32_t>(batch_index);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(meta_text.size()));
    w.put_bytes({reinterpret_cast<const std::uint8_t*>(meta_text.data()), meta_text.size()});

    std::vector<BlockInfo> index;
    {
        const auto raw = shuffle_columns(schema(EventGroup::Sequence), {sequence}, sequence.size());
        put_block(w, index, EventGroup::Sequence, kCodecShuffleDeflate, 1, sequence.size(), raw);
    }
    for (const auto& [g, gc] : groups) {
        const auto cols = schema(g);
        const auto raw = shuffle_columns(cols, gc.cols, gc.count);
        put_block(w, index, g, kCodecShuffleDeflate, record_width(g), gc.count, raw);
    }
    if (!blob.empty()) {
        put_block(w, index, EventGroup::DepthData, kCodecStoredDeflate, 0, 1, blob);
    }

    const std::size_t footer_start = w.size();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(index.size()));
    for (const auto& b : index) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(b.group));
        w.put<std::uint8_t>(0);
        w.put<std::uint16_t>(0);
        w.put<std::uint64_t>(b.offset);
        w.put<std::uint32_t>(b.record_count);
    }
    w.put<std::uint64_t>(events.size());
    w.put<double>(event_time(events.front()));
    w.put<double>(event_time(events.back()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(w.size() - footer_start));
    w.put_bytes(kFooterMagic);
    return std::move(w).take();
}

DecodedBatch decode_batch(std::span<const std::uint8_t> bytes, const std::string& label)
{
    DecodedBatch out;
    ByteReader r(bytes, ErrorKind::Corruption);
    try {
        auto magic = r.get_bytes(4);
        if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
            corrupt(label, "bad magic (not an FVR1 file)");
        }
        const auto version = r.get<std::uint16_t>();
        if (version != kFormatVersion) {
            fail(ErrorKind::Unsupported, label + ": FVR1 format version " + std::to_string(version) + " not supported");
        }
        r.get<std::uint16_t>();
        out.batch_index = r.get<std::uint32_t>();
        const auto meta_len = r.get<std::uint32_t>();
        auto meta = r.get_bytes(meta_len);
        out.meta_text.assign(reinterpret_cast<const char*>(meta.data()), meta.size());

        // Footer.
        if (bytes.size() < 8) {
            corrupt(label, "file too short for footer");
        }
        ByteReader tail(bytes.subspan(bytes.size() - 8), ErrorKind::Corruption);
        const auto footer_len = tail.get<std::uint32_t>();
        auto fmagic = tail.get_bytes(4);
        if (!std::equal(fmagic.begin(), fmagic.end(), kFooterMagic.begin())) {
            corrupt(label, "bad footer magic");
        }
        if (footer_len + 8 > bytes.size()) {
            corrupt(label, "footer length out of range");
        }
        const std::size_t footer_start = bytes.size() - 8 - footer_len;
        ByteReader f(bytes.subspan(footer_start, footer_len + 4), ErrorKind::Corruption);
        const auto block_count = f.get<std::uint32_t>();
        for (std::uint32_t b = 0; b < block_count; ++b) {
            BlockInfo info;
            info.group = static_cast<EventGroup>(f.get<std::uint8_t>());
            f.get<std::uint8_t>();
            f.get<std::uint16_t>();
            info.offset = f.get<std::uint64_t>();
            info.record_count = f.get<std::uint32_t>();
            out.blocks.push_back(info);
        }
        const auto event_count = f.get<std::uint64_t>();
        out.t_min = f.get<double>();
        out.t_max = f.get<double>();

        std::map<EventGroup, std::vector<std::vector<std::uint64_t>>> columns;
        std::map<EventGroup, std::size_t> counts;
        std::vector<std::uint8_t> blob;
        for (const BlockInfo& info : out.blocks) {
            if (info.offset >= footer_start) {
                corrupt(label, "block offset out of range");
            }
            ByteReader br(bytes.subspan(info.offset, footer_start - info.offset), ErrorKind::Corruption);
            const auto g = static_cast<EventGroup>(br.get<std::uint8_t>());
            const auto codec = br.get<std::uint8_t>();
            const auto rec_width = br.get<std::uint16_t>();
            const auto count = br.get<std::uint32_t>();
            const auto raw_len = br.get<std::uint32_t>();
            const auto comp_len = br.get<std::uint32_t>();
            const auto crc = br.get<std::uint32_t>();
            auto comp = br.get_bytes(comp_len);
            if (g != info.group || count != info.record_count) {
                corrupt(label, "block header disagrees with footer index");
            }
            if (crc32(comp) != crc) {
                corrupt(label, std::string("CRC mismatch in block '") + std::string(group_name(g)) + "'");
            }
            auto raw = inflate_raw(comp, raw_len);
            if (g == EventGroup::DepthData) {
                if (codec != kCodecStoredDeflate) {
                    corrupt(label, "unexpected codec for depth_data");
                }
                blob = std::move(raw);
                continue;
            }
            const auto cols = schema(g);
            if (cols.empty() || codec != kCodecShuffleDeflate || rec_width != record_width(g) ||
                std::size_t(rec_width) * count != raw_len) {
                corrupt(label, std::string("malformed block '") + std::string(group_name(g)) + "'");
            }
            columns[g] = unshuffle_columns(cols, raw, count);
            counts[g] = count;
        }

        auto seq_it = columns.find(EventGroup::Sequence);
        if (seq_it == columns.end() || counts[EventGroup::Sequence] != event_count) {
            corrupt(label, "sequence block missing or inconsistent");
        }
        const auto& seq = seq_it->second[0];
        std::map<EventGroup, std::size_t> cursor;
        out.events.reserve(seq.size());
        for (std::uint64_t gid : seq) {
            const auto g = static_cast<EventGroup>(gid);
            auto cit = columns.find(g);
            std::size_t& n = cursor[g];
            if (cit == columns.end() || n >= counts[g]) {
                corrupt(label, "sequence references a missing record");
            }
            const auto& c = cit->second;
            switch (g) {
            case EventGroup::VoxelsRemoved:
                out.events.emplace_back(VoxelRemovedEvent{
                    bits_f64(c[0][n]),
                    {std::uint32_t(c[1][n]), std::uint32_t(c[2][n]), std::uint32_t(c[3][n])},
                    static_cast<Label>(c[4][n]),
                    {bits_f32(c[5][n]), bits_f32(c[6][n]), bits_f32(c[7][n])}});
                break;
            case EventGroup::ForceFeedback:
                out.events.emplace_back(
                    ForceSampleEvent{bits_f64(c[0][n]), {bits_f64(c[1][n]), bits_f64(c[2][n]), bits_f64(c[3][n])}});
                break;
            case EventGroup::BurrChange:
                if (c[2][n] > 1) {
                    corrupt(label, "invalid burr tip code");
                }
                out.events.emplace_back(
                    BurrChangeEvent{bits_f64(c[0][n]), bits_f64(c[1][n]), static_cast<BurrTip>(c[2][n])});
                break;
            case EventGroup::Kinematics: {
                auto v = [&](int col) { return bits_f64(c[col][n]); };
                out.events.emplace_back(KinematicsEvent{v(0),
                                                        {{v(1), v(2), v(3)}, {v(4), v(5), v(6), v(7)}},
                                                        {{v(8), v(9), v(10)}, {v(11), v(12), v(13), v(14)}}});
                break;
            }
            case EventGroup::DepthFrames: {
                DepthFrameEvent d;
                d.t = bits_f64(c[0][n]);
                d.width = std::uint32_t(c[1][n]);
                d.height = std::uint32_t(c[2][n]);
                const std::uint64_t off = c[3][n];
                const std::size_t px = std::size_t(d.width) * d.height;
                const std::size_t need = px * (sizeof(float) + sizeof(Label));
                if (off > blob.size() || blob.size() - off < need) {
                    corrupt(label, "depth frame payload out of range");
                }
                d.depth_mm.resize(px);
                d.labels.resize(px);
                std::memcpy(d.depth_mm.data(), blob.data() + off, px * sizeof(float));
                std::memcpy(d.labels.data(), blob.data() + off + px * sizeof(float), px * sizeof(Label));
                out.events.emplace_back(std::move(d));
                break;
            }
            default: corrupt(label, "sequence references unknown group " + std::to_string(gid));
            }
            ++n;
        }
        for (const auto& [g, n] : cursor) {
            if (n != counts[g]) {
                corrupt(label, std::string("unreferenced records in block '") + std::string(group_name(g)) + "'");
            }
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Corruption && std::string(e.what()).rfind(label, 0) != 0) {
            corrupt(label, e.what());
        }
        throw;
    }
    return out;
}

} // namespace burrsim::fvr
