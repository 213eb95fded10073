#include "burrsim/gateway/wire.hpp"

#include "burrsim/core/bytes.hpp"
#include "burrsim/core/compress.hpp"
#include "burrsim/core/errors.hpp"

#include <algorithm>

namespace burrsim::wire {

namespace {

void put_vec(ByteWriter& w, Vec3 v)
{
    w.put(v.x);
    w.put(v.y);
    w.put(v.z);
}

void put_quat(ByteWriter& w, const Quat& q)
{
    w.put(q.w);
    w.put(q.x);
    w.put(q.y);
    w.put(q.z);
}

void put_pose(ByteWriter& w, const Pose& p)
{
    put_vec(w, p.position);
    put_quat(w, p.orientation);
}

Vec3 get_vec(ByteReader& r)
{
    Vec3 v;
    v.x = r.get<double>();
    v.y = r.get<double>();
    v.z = r.get<double>();
    return v;
}

Quat get_quat(ByteReader& r)
{
    Quat q;
    q.w = r.get<double>();
    q.x = r.get<double>();
    q.y = r.get<double>();
    q.z = r.get<double>();
    return q;
}

Pose get_pose(ByteReader& r)
{
    Pose p;
    p.position = get_vec(r);
    p.orientation = get_quat(r);
    return p;
}

[[noreturn]] void malformed(const std::string& what) { fail(ErrorKind::Framing, "malformed frame: " + what); }

template <typename E>
E get_enum(ByteReader& r, std::uint8_t max, const char* what)
{
    const auto v = r.get<std::uint8_t>();
    if (v > max) {
        malformed(std::string("bad ") + what + " value " + std::to_string(v));
    }
    return static_cast<E>(v);
}

struct PayloadWriter {
    ByteWriter& w;

    void operator()(const Hello& m) const
    {
        w.put(m.protocol_version);
        w.put(static_cast<std::uint8_t>(m.role));
        w.put(m.session_token);
        w.put(m.digest);
        w.put(m.dims.x);
        w.put(m.dims.y);
        w.put(m.dims.z);
        put_vec(w, m.spacing);
        put_vec(w, m.origin);
        w.put(m.tick_rate_hz);
        w.put(m.state_rate_hz);
        w.put(m.base_seq);
        require(m.segments.size() <= 0xFFFF, "too many segments");
        w.put(static_cast<std::uint16_t>(m.segments.size()));
        for (const WireSegment& s : m.segments) {
            w.put(s.label);
            w.put_string16(s.name);
            for (float c : s.color) {
                w.put(c);
            }
            w.put(static_cast<std::uint8_t>(s.sensitive ? 1 : 0));
        }
    }

    void operator()(const VolumeSnapshot& m) const
    {
        w.put(m.chunk_index);
        w.put(m.chunk_total);
        w.put(m.raw_bytes);
        w.put(static_cast<std::uint32_t>(m.data.size()));
        w.put_bytes(m.data);
    }

    void operator()(const InputFrame& m) const
    {
        w.put(m.seq);
        put_vec(w, m.input.tip_position);
        put_quat(w, m.input.tip_orientation);
        w.put(m.input.pedal);
        w.put(m.input.burr_id);
        put_pose(w, m.camera);
    }

    void operator()(const StateFrame& m) const
    {
        w.put(m.seq);
        w.put(m.tick);
        w.put(m.t);
        put_pose(w, m.drill);
        put_vec(w, m.F_collision);
        put_vec(w, m.F_haptic);
        w.put(m.pitch);
        w.put(m.burr_id);
        w.put(m.pedal);
        w.put(m.input_seq);
        w.put(static_cast<std::uint8_t>(m.digest ? 1 : 0));
        if (m.digest) {
            w.put(*m.digest);
        }
        require(m.warnings.size() <= 0xFFFF, "too many warnings");
        w.put(static_cast<std::uint16_t>(m.warnings.size()));
        for (const WireWarning& x : m.warnings) {
            w.put(x.label);
            w.put(static_cast<std::uint8_t>(x.kind));
        }
        w.put(static_cast<std::uint32_t>(m.delta.size()));
        for (const DeltaVoxel& d : m.delta) {
            w.put(d.i);
            w.put(d.j);
            w.put(d.k);
            w.put(d.label);
        }
    }

    void operator()(const BurrList& m) const
    {
        w.put(m.current);
        w.put(static_cast<std::uint16_t>(m.burrs.size()));
        for (const Burr& b : m.burrs) {
            w.put(b.radius_mm);
            w.put(static_cast<std::uint8_t>(b.tip));
            w.put(b.brr);
        }
    }

    void operator()(const Ack& m) const { w.put(m.seq); }

    void operator()(const ErrorMsg& m) const
    {
        w.put(static_cast<std::uint16_t>(m.code));
        w.put_string16(m.text);
    }

    void operator()(const Join& m) const
    {
        w.put(static_cast<std::uint8_t>(m.role));
        w.put(m.token);
    }
};

Message decode_payload(Tag tag, ByteReader& r)
{
    switch (tag) {
    case Tag::Hello: {
        Hello m;
        m.protocol_version = r.get<std::uint16_t>();
        m.role = get_enum<Role>(r, 1, "role");
        m.session_token = r.get<std::uint64_t>();
        m.digest = r.get<std::uint64_t>();
        m.dims.x = r.get<std::uint32_t>();
        m.dims.y = r.get<std::uint32_t>();
        m.dims.z = r.get<std::uint32_t>();
        m.spacing = get_vec(r);
        m.origin = get_vec(r);
        m.tick_rate_hz = r.get<double>();
        m.state_rate_hz = r.get<double>();
        m.base_seq = r.get<std::uint64_t>();
        const auto n = r.get<std::uint16_t>();
        for (std::uint16_t i = 0; i < n; ++i) {
            WireSegment s;
            s.label = r.get<Label>();
            s.name = r.get_string16();
            for (float& c : s.color) {
                c = r.get<float>();
            }
            s.sensitive = get_enum<std::uint8_t>(r, 1, "sensitive flag") != 0;
            m.segments.push_back(std::move(s));
        }
        return m;
    }
    case Tag::VolumeSnapshot: {
        VolumeSnapshot m;
        m.chunk_index = r.get<std::uint32_t>();
        m.chunk_total = r.get<std::uint32_t>();
        m.raw_bytes = r.get<std::uint32_t>();
        const auto n = r.get<std::uint32_t>();
        auto b = r.get_bytes(n);
        m.data.assign(b.begin(), b.end());
        return m;
    }
    case Tag::InputFrame: {
        InputFrame m;
        m.seq = r.get<std::uint64_t>();
        m.input.tip_position = get_vec(r);
        m.input.tip_orientation = get_quat(r);
        m.input.pedal = r.get<double>();
        m.input.burr_id = r.get<std::uint32_t>();
        m.camera = get_pose(r);
        return m;
    }
    case Tag::StateFrame: {
        StateFrame m;
        m.seq = r.get<std::uint64_t>();
        m.tick = r.get<std::uint64_t>();
        m.t = r.get<double>();
        m.drill = get_pose(r);
        m.F_collision = get_vec(r);
        m.F_haptic = get_vec(r);
        m.pitch = r.get<double>();
        m.burr_id = r.get<std::uint32_t>();
        m.pedal = r.get<double>();
        m.input_seq = r.get<std::uint64_t>();
        if (get_enum<std::uint8_t>(r, 1, "digest flag") != 0) {
            m.digest = r.get<std::uint64_t>();
        }
        const auto nw = r.get<std::uint16_t>();
        for (std::uint16_t i = 0; i < nw; ++i) {
            WireWarning x;
            x.label = r.get<Label>();
            x.kind = get_enum<WarningKind>(r, 1, "warning kind");
            m.warnings.push_back(x);
        }
        const auto nd = r.get<std::uint32_t>();
        if (static_cast<std::size_t>(nd) * 14 > r.remaining()) {
            malformed("delta count exceeds payload");
        }
        m.delta.reserve(nd);
        for (std::uint32_t i = 0; i < nd; ++i) {
            DeltaVoxel d;
            d.i = r.get<std::uint32_t>();
            d.j = r.get<std::uint32_t>();
            d.k = r.get<std::uint32_t>();
            d.label = r.get<Label>();
            m.delta.push_back(d);
        }
        return m;
    }
    case Tag::BurrList: {
        BurrList m;
        m.current = r.get<std::uint32_t>();
        const auto n = r.get<std::uint16_t>();
        for (std::uint16_t i = 0; i < n; ++i) {
            Burr b;
            b.radius_mm = r.get<double>();
            b.tip = get_enum<BurrTip>(r, 1, "burr tip");
            b.brr = r.get<double>();
            m.burrs.push_back(b);
        }
        return m;
    }
    case Tag::Ack:
        return Ack{r.get<std::uint64_t>()};
    case Tag::Error: {
        ErrorMsg m;
        m.code = static_cast<ErrorCode>(r.get<std::uint16_t>());
        m.text = r.get_string16();
        return m;
    }
    case Tag::Join: {
        Join m;
        m.role = get_enum<Role>(r, 1, "role");
        m.token = r.get<std::uint64_t>();
        return m;
    }
    }
    fail(ErrorKind::Unsupported, "unknown message tag " + std::to_string(static_cast<int>(tag)));
}

} // namespace

Tag tag_of(const Message& m) noexcept { return static_cast<Tag>(m.index() + 1); }

void encode_into(std::vector<std::uint8_t>& out, const Message& m)
{
    ByteWriter w;
    w.put<std::uint32_t>(0);
    w.put(static_cast<std::uint8_t>(tag_of(m)));
    w.put(kFrameVersion);
    std::visit(PayloadWriter{w}, m);
    require(w.size() - 4 <= 0xFFFFFFFFull, "frame too large");
    w.patch<std::uint32_t>(0, static_cast<std::uint32_t>(w.size() - 4));
    out.insert(out.end(), w.bytes().begin(), w.bytes().end());
}

std::vector<std::uint8_t> encode(const Message& m)
{
    std::vector<std::uint8_t> out;
    encode_into(out, m);
    return out;
}

Message decode(std::span<const std::uint8_t> frame, std::size_t max_frame_bytes)
{
    ByteReader r(frame, ErrorKind::Framing);
    const auto len = r.get<std::uint32_t>();
    if (len > max_frame_bytes) {
        fail(ErrorKind::Framing, "frame length " + std::to_string(len) + " exceeds limit " + std::to_string(max_frame_bytes));
    }
    if (len < 2) {
        fail(ErrorKind::Framing, "frame length " + std::to_string(len) + " shorter than tag and version");
    }
    if (len != r.remaining()) {
        fail(ErrorKind::Framing, "frame announces " + std::to_string(len) + " bytes but carries " +
                                     std::to_string(r.remaining()));
    }
    const auto tag = r.get<std::uint8_t>();
    const auto version = r.get<std::uint8_t>();
    if (tag < 1 || tag > 8) {
        fail(ErrorKind::Unsupported, "unknown message tag " + std::to_string(tag));
    }
    if (version != kFrameVersion) {
        fail(ErrorKind::Unsupported, "unsupported frame version " + std::to_string(version));
    }
    Message m = decode_payload(static_cast<Tag>(tag), r);
    if (!r.at_end()) {
        malformed(std::to_string(r.remaining()) + " trailing bytes");
    }
    return m;
}

void FrameReader::feed(std::span<const std::uint8_t> bytes)
{
    if (pos_ > 0 && pos_ * 2 >= buf_.size()) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
        pos_ = 0;
    }
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<std::vector<std::uint8_t>> FrameReader::next_frame()
{
    if (buffered() < 4) {
        return std::nullopt;
    }
    std::uint32_t len = 0;
    std::memcpy(&len, buf_.data() + pos_, 4);
    if (len > max_) {
        fail(ErrorKind::Framing, "frame length " + std::to_string(len) + " exceeds limit " + std::to_string(max_));
    }
    if (buffered() < 4 + static_cast<std::size_t>(len)) {
        return std::nullopt;
    }
    std::vector<std::uint8_t> frame(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                    buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + 4 + len));
    pos_ += 4 + len;
    return frame;
}

std::vector<VolumeSnapshot> make_snapshot(std::span<const Label> labels, std::size_t chunk_bytes)
{
    require(chunk_bytes > 0, "snapshot chunk size must be positive");
    const std::span<const std::uint8_t> raw(reinterpret_cast<const std::uint8_t*>(labels.data()), labels.size_bytes());
    require(raw.size() <= 0xFFFFFFFFull, "volume too large for a snapshot");
    const std::vector<std::uint8_t> packed = deflate_raw(raw);
    const std::size_t total = std::max<std::size_t>(1, (packed.size() + chunk_bytes - 1) / chunk_bytes);
    std::vector<VolumeSnapshot> chunks;
    for (std::size_t c = 0; c < total; ++c) {
        VolumeSnapshot s;
        s.chunk_index = static_cast<std::uint32_t>(c);
        s.chunk_total = static_cast<std::uint32_t>(total);
        s.raw_bytes = static_cast<std::uint32_t>(raw.size());
        const std::size_t begin = c * chunk_bytes;
        const std::size_t end = std::min(packed.size(), begin + chunk_bytes);
        s.data.assign(packed.begin() + static_cast<std::ptrdiff_t>(begin), packed.begin() + static_cast<std::ptrdiff_t>(end));
        chunks.push_back(std::move(s));
    }
    return chunks;
}

std::vector<WireSegment> to_wire(const SegmentTable& table)
{
    std::vector<WireSegment> out;
    for (const auto& [label, seg] : table.entries()) {
        out.push_back({label,
                       seg.name,
                       {static_cast<float>(seg.color.r), static_cast<float>(seg.color.g), static_cast<float>(seg.color.b)},
                       seg.sensitive});
    }
    return out;
}

SegmentTable from_wire(const std::vector<WireSegment>& segments)
{
    SegmentTable table;
    for (const WireSegment& s : segments) {
        table.add(s.label, Segment{s.name, Rgb{s.color[0], s.color[1], s.color[2]}, s.sensitive});
    }
    return table;
}

} // namespace burrsim::wire
