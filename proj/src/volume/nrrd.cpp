#include "burrsim/volume/nrrd.hpp"

#include "burrsim/core/bytes.hpp"
#include "burrsim/core/compress.hpp"
#include "burrsim/core/errors.hpp"
#include "burrsim/core/text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace burrsim {

std::string_view to_string(NrrdType type) noexcept
{
    switch (type) {
    case NrrdType::UInt8: return "uint8";
    case NrrdType::UInt16: return "uint16";
    case NrrdType::Int16: return "int16";
    case NrrdType::Float32: return "float";
    }
    return "?";
}

std::string_view to_string(NrrdEncoding encoding) noexcept
{
    return encoding == NrrdEncoding::Raw ? "raw" : "gzip";
}

namespace {

[[noreturn]] void header_error(const std::string& field, const std::string& detail)
{
    fail(ErrorKind::Parse, "nrrd header field '" + field + "': " + detail);
}

NrrdType parse_type(const std::string& raw)
{
    const std::string t = text::to_lower(text::trim(raw));
    if (t == "uchar" || t == "unsigned char" || t == "uint8" || t == "uint8_t") {
        return NrrdType::UInt8;
    }
    if (t == "ushort" || t == "unsigned short" || t == "unsigned short int" || t == "uint16" || t == "uint16_t") {
        return NrrdType::UInt16;
    }
    if (t == "short" || t == "short int" || t == "signed short" || t == "signed short int" || t == "int16" ||
        t == "int16_t") {
        return NrrdType::Int16;
    }
    if (t == "float") {
        return NrrdType::Float32;
    }
    fail(ErrorKind::Unsupported, "nrrd element type '" + raw + "' is not supported (uint8, uint16, int16, float)");
}

std::size_t type_size(NrrdType t) noexcept
{
    switch (t) {
    case NrrdType::UInt8: return 1;
    case NrrdType::UInt16:
    case NrrdType::Int16: return 2;
    case NrrdType::Float32: return 4;
    }
    return 1;
}

NrrdEncoding parse_encoding(const std::string& raw)
{
    const std::string e = text::to_lower(text::trim(raw));
    if (e == "raw") {
        return NrrdEncoding::Raw;
    }
    if (e == "gzip" || e == "gz") {
        return NrrdEncoding::Gzip;
    }
    fail(ErrorKind::Unsupported, "nrrd encoding '" + raw + "' is not supported (raw, gzip)");
}

// Parses "(a,b,c)" into a vector; "none" yields nullopt.
std::optional<Vec3> parse_vector(std::string_view s, const std::string& field)
{
    s = text::trim(s);
    if (s == "none") {
        return std::nullopt;
    }
    if (s.size() < 2 || s.front() != '(' || s.back() != ')') {
        header_error(field, "expected '(x,y,z)', got '" + std::string(s) + "'");
    }
    s = s.substr(1, s.size() - 2);
    Vec3 v;
    std::size_t d = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == ',') {
            if (d == 3) {
                header_error(field, "vector has more than 3 components");
            }
            auto value = text::parse_double(s.substr(start, i - start));
            if (!value) {
                header_error(field, "non-numeric component '" + std::string(s.substr(start, i - start)) + "'");
            }
            v[d++] = *value;
            start = i + 1;
        }
    }
    if (d != 3) {
        header_error(field, "vector has fewer than 3 components");
    }
    return v;
}

std::vector<std::string_view> split_vectors(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (std::isspace(static_cast<unsigned char>(s[i]))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (s[i] == '(') {
            while (i < s.size() && s[i] != ')') {
                ++i;
            }
            i = std::min(i + 1, s.size());
        } else {
            while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) {
                ++i;
            }
        }
        out.push_back(s.substr(start, i - start));
    }
    return out;
}

const std::string* find_field(const NrrdHeader& h, std::initializer_list<const char*> names)
{
    for (const char* n : names) {
        auto it = h.fields.find(n);
        if (it != h.fields.end()) {
            return &it->second;
        }
    }
    return nullptr;
}

bool has_segment_keys(const NrrdHeader& h)
{
    auto it = h.key_values.lower_bound("Segment0_");
    return it != h.key_values.end() && it->first.starts_with("Segment0_");
}

template <typename T>
std::vector<double> decode_samples(std::span<const std::uint8_t> payload, std::size_t count)
{
    std::vector<double> out(count);
    for (std::size_t n = 0; n < count; ++n) {
        T v;
        std::memcpy(&v, payload.data() + n * sizeof(T), sizeof(T));
        out[n] = static_cast<double>(v);
    }
    return out;
}

std::string vec_text(Vec3 v)
{
    return "(" + text::format_double(v.x) + "," + text::format_double(v.y) + "," + text::format_double(v.z) + ")";
}

std::string header_prefix(const GridGeometry& g, NrrdType type, NrrdEncoding encoding)
{
    std::ostringstream h;
    h << "NRRD0004\n";
    h << "# Complete NRRD file format specification at:\n";
    h << "# http://teem.sourceforge.net/nrrd/format.html\n";
    h << "type: " << to_string(type) << "\n";
    h << "dimension: 3\n";
    h << "space: left-posterior-superior\n";
    h << "sizes: " << g.dims.x << " " << g.dims.y << " " << g.dims.z << "\n";
    h << "space directions: " << vec_text({g.spacing.x, 0, 0}) << " " << vec_text({0, g.spacing.y, 0}) << " "
      << vec_text({0, 0, g.spacing.z}) << "\n";
    h << "kinds: domain domain domain\n";
    if (type_size(type) > 1) {
        h << "endian: little\n";
    }
    h << "encoding: " << to_string(encoding) << "\n";
    h << "space origin: " << vec_text(g.origin) << "\n";
    return h.str();
}

std::vector<std::uint8_t> assemble(const std::string& header, std::vector<std::uint8_t> payload,
                                   NrrdEncoding encoding)
{
    if (encoding == NrrdEncoding::Gzip) {
        payload = gzip_compress(payload);
    }
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.push_back('\n');
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

template <typename T>
void put_sample(std::vector<std::uint8_t>& out, T v)
{
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

} // namespace

NrrdHeader parse_nrrd_header(std::span<const std::uint8_t> bytes)
{
    NrrdHeader h;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto next_line = [&](std::string_view& line) -> bool {
        if (pos >= bytes.size()) {
            return false;
        }
        const auto* begin = reinterpret_cast<const char*>(bytes.data()) + pos;
        const auto* end = reinterpret_cast<const char*>(bytes.data()) + bytes.size();
        const auto* nl = std::find(begin, end, '\n');
        line = std::string_view(begin, static_cast<std::size_t>(nl - begin));
        pos += line.size() + (nl == end ? 0 : 1);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        ++line_no;
        return nl != end;
    };

    std::string_view line;
    if (!next_line(line) || line.size() != 8 || !line.starts_with("NRRD000") || line[7] < '1' || line[7] > '5') {
        fail(ErrorKind::Parse, "nrrd header field 'magic': missing NRRD000X magic line");
    }
    h.format_version = line[7] - '0';

    bool terminated = false;
    while (next_line(line)) {
        if (line.empty()) {
            terminated = true;
            break;
        }
        if (line.front() == '#') {
            continue;
        }
        if (auto kv = line.find(":="); kv != std::string_view::npos) {
            h.key_values[std::string(line.substr(0, kv))] = std::string(line.substr(kv + 2));
            continue;
        }
        auto colon = line.find(": ");
        if (colon == std::string_view::npos) {
            fail(ErrorKind::Parse, "nrrd header line " + std::to_string(line_no) + " is not 'field: value': '" +
                                       std::string(line) + "'");
        }
        h.fields[text::to_lower(text::trim(line.substr(0, colon)))] = std::string(text::trim(line.substr(colon + 2)));
    }
    if (!terminated) {
        fail(ErrorKind::Parse, "nrrd header field 'separator': header not terminated by a blank line");
    }
    h.payload_offset = pos;
    return h;
}

SegmentTable parse_seg_metadata(const std::map<std::string, std::string>& key_values)
{
    SegmentTable table;
    for (int n = 0;; ++n) {
        const std::string prefix = "Segment" + std::to_string(n) + "_";
        auto name_it = key_values.find(prefix + "Name");
        auto label_it = key_values.find(prefix + "LabelValue");
        auto color_it = key_values.find(prefix + "Color");
        if (name_it == key_values.end() && label_it == key_values.end() && color_it == key_values.end()) {
            break;
        }
        Label label = static_cast<Label>(n + 1);
        if (label_it != key_values.end()) {
            auto v = text::parse_int(label_it->second);
            if (!v || *v < 1 || *v > 0xFFFF) {
                fail(ErrorKind::Parse, "segment field '" + prefix + "LabelValue': expected an integer in [1,65535], got '" +
                                           label_it->second + "'");
            }
            label = static_cast<Label>(*v);
        }
        Segment seg;
        seg.name = name_it != key_values.end() ? name_it->second : "Segment_" + std::to_string(label);
        if (color_it != key_values.end()) {
            auto parts = text::split_ws(color_it->second);
            if (parts.size() != 3) {
                fail(ErrorKind::Parse, "segment field '" + prefix + "Color': expected three reals, got '" +
                                           color_it->second + "'");
            }
            std::array<double, 3> rgb{};
            for (std::size_t c = 0; c < 3; ++c) {
                auto v = text::parse_double(parts[c]);
                if (!v) {
                    fail(ErrorKind::Parse, "segment field '" + prefix + "Color': non-numeric component '" +
                                               std::string(parts[c]) + "'");
                }
                rgb[c] = *v;
            }
            seg.color = {rgb[0], rgb[1], rgb[2]};
        }
        if (auto tags = key_values.find(prefix + "Tags"); tags != key_values.end()) {
            const std::string padded = "|" + tags->second;
            seg.sensitive = padded.find("|Sensitive:1|") != std::string::npos ||
                            padded.ends_with("|Sensitive:1");
        }
        if (table.contains(label)) {
            fail(ErrorKind::Conflict, "segment field '" + prefix + "LabelValue': duplicate label value " +
                                          std::to_string(label));
        }
        table.add(label, std::move(seg));
    }
    return table;
}

ParsedVolume parse_nrrd(std::span<const std::uint8_t> bytes)
{
    const NrrdHeader h = parse_nrrd_header(bytes);

    if (find_field(h, {"data file", "datafile"})) {
        fail(ErrorKind::Unsupported, "detached nrrd data files are not supported");
    }
    const std::string* dim_text = find_field(h, {"dimension"});
    if (!dim_text) {
        header_error("dimension", "missing");
    }
    auto dim = text::parse_int(*dim_text);
    if (!dim) {
        header_error("dimension", "not an integer: '" + *dim_text + "'");
    }
    if (*dim == 4 && has_segment_keys(h)) {
        fail(ErrorKind::Unsupported, "one-hot multi-layer segmentation (dimension 4) is not supported; "
                                     "export the segmentation as a single label map");
    }
    if (*dim != 3) {
        header_error("dimension", "only 3D volumes are supported, got " + *dim_text);
    }

    const std::string* type_text = find_field(h, {"type"});
    if (!type_text) {
        header_error("type", "missing");
    }
    const NrrdType type = parse_type(*type_text);

    const std::string* enc_text = find_field(h, {"encoding"});
    if (!enc_text) {
        header_error("encoding", "missing");
    }
    const NrrdEncoding encoding = parse_encoding(*enc_text);

    if (const std::string* endian = find_field(h, {"endian"}); endian && type_size(type) > 1) {
        const std::string e = text::to_lower(*endian);
        if (e == "big") {
            fail(ErrorKind::Unsupported, "big-endian nrrd payloads are not supported");
        }
        if (e != "little") {
            header_error("endian", "expected little or big, got '" + *endian + "'");
        }
    }

    GridGeometry g;
    const std::string* sizes_text = find_field(h, {"sizes"});
    if (!sizes_text) {
        header_error("sizes", "missing");
    }
    {
        auto parts = text::split_ws(*sizes_text);
        if (parts.size() != 3) {
            header_error("sizes", "expected 3 sizes, got '" + *sizes_text + "'");
        }
        std::array<std::uint32_t, 3> s{};
        for (std::size_t d = 0; d < 3; ++d) {
            auto v = text::parse_int(parts[d]);
            if (!v || *v < 1 || *v > std::numeric_limits<std::uint32_t>::max()) {
                header_error("sizes", "bad size '" + std::string(parts[d]) + "'");
            }
            s[d] = static_cast<std::uint32_t>(*v);
        }
        g.dims = {s[0], s[1], s[2]};
    }

    if (const std::string* dirs = find_field(h, {"space directions"})) {
        auto parts = split_vectors(*dirs);
        if (parts.size() != 3) {
            header_error("space directions", "expected 3 direction vectors, got '" + *dirs + "'");
        }
        for (std::size_t d = 0; d < 3; ++d) {
            auto v = parse_vector(parts[d], "space directions");
            if (!v) {
                header_error("space directions", "axis " + std::to_string(d) + " has no direction");
            }
            g.spacing[d] = norm(*v);
            if (!(g.spacing[d] > 0.0)) {
                header_error("space directions", "axis " + std::to_string(d) + " has zero length");
            }
        }
    } else if (const std::string* sp = find_field(h, {"spacings"})) {
        auto parts = text::split_ws(*sp);
        if (parts.size() != 3) {
            header_error("spacings", "expected 3 spacings, got '" + *sp + "'");
        }
        for (std::size_t d = 0; d < 3; ++d) {
            auto v = text::parse_double(parts[d]);
            if (!v || !(*v > 0.0)) {
                header_error("spacings", "bad spacing '" + std::string(parts[d]) + "'");
            }
            g.spacing[d] = *v;
        }
    }
    if (const std::string* org = find_field(h, {"space origin"})) {
        auto v = parse_vector(*org, "space origin");
        if (!v) {
            header_error("space origin", "origin may not be 'none'");
        }
        g.origin = *v;
    }

    const std::size_t count = g.dims.count();
    const std::size_t expected = count * type_size(type);
    std::span<const std::uint8_t> body = bytes.subspan(h.payload_offset);
    std::vector<std::uint8_t> inflated;
    if (encoding == NrrdEncoding::Gzip) {
        try {
            inflated = gzip_decompress(body);
        } catch (const Error& e) {
            fail(ErrorKind::Truncated, std::string("gzip payload is truncated or damaged: ") + e.what() +
                                           " (expected " + std::to_string(expected) + " bytes after decompression)");
        }
        body = inflated;
    }
    if (body.size() != expected) {
        if (body.size() < expected) {
            fail(ErrorKind::Truncated, "nrrd payload truncated: expected " + std::to_string(expected) + " bytes, got " +
                                           std::to_string(body.size()) + " (missing " +
                                           std::to_string(expected - body.size()) + " bytes)");
        }
        fail(ErrorKind::Truncated, "nrrd payload length mismatch: expected " + std::to_string(expected) +
                                       " bytes, got " + std::to_string(body.size()) + " (" +
                                       std::to_string(body.size() - expected) + " extra bytes)");
    }

    std::vector<double> samples;
    switch (type) {
    case NrrdType::UInt8: samples = decode_samples<std::uint8_t>(body, count); break;
    case NrrdType::UInt16: samples = decode_samples<std::uint16_t>(body, count); break;
    case NrrdType::Int16: samples = decode_samples<std::int16_t>(body, count); break;
    case NrrdType::Float32: samples = decode_samples<float>(body, count); break;
    }

    if (type != NrrdType::Float32 && has_segment_keys(h)) {
        SegmentTable table = parse_seg_metadata(h.key_values);
        std::vector<Label> labels(count);
        for (std::size_t n = 0; n < count; ++n) {
            const double v = samples[n];
            if (v < 0.0) {
                fail(ErrorKind::Parse, "label map contains negative value " + text::format_double(v));
            }
            labels[n] = static_cast<Label>(v);
            if (labels[n] != 0 && !table.contains(labels[n])) {
                fail(ErrorKind::Parse, "label map value " + std::to_string(labels[n]) +
                                           " has no Segment<N>_LabelValue entry");
            }
        }
        return LabeledVolume(g, std::move(labels), std::move(table));
    }

    IntensityVolume iv;
    iv.geometry = g;
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    const double min_v = *lo;
    const double range = *hi - *lo;
    for (double& v : samples) {
        if (!std::isfinite(v)) {
            fail(ErrorKind::Parse, "intensity payload contains a non-finite value");
        }
        v = range > 0.0 ? (v - min_v) / range : 0.0;
    }
    iv.values = std::move(samples);
    iv.validate();
    return iv;
}

ParsedVolume read_nrrd(const std::filesystem::path& path)
{
    return parse_nrrd(read_file(path));
}

std::vector<std::uint8_t> write_nrrd(const LabeledVolume& vol, NrrdType type, NrrdEncoding encoding)
{
    require(type != NrrdType::Float32, "label maps must be written with an integer type");
    std::string header = header_prefix(vol.geometry(), type, encoding);
    int n = 0;
    for (const auto& [label, seg] : vol.segments().entries()) {
        const std::string p = "Segment" + std::to_string(n) + "_";
        header += p + "Color:=" + text::format_double(seg.color.r) + " " + text::format_double(seg.color.g) + " " +
                  text::format_double(seg.color.b) + "\n";
        header += p + "ID:=Segment_" + std::to_string(label) + "\n";
        header += p + "LabelValue:=" + std::to_string(label) + "\n";
        header += p + "Layer:=0\n";
        header += p + "Name:=" + seg.name + "\n";
        if (seg.sensitive) {
            header += p + "Tags:=Sensitive:1|\n";
        }
        ++n;
    }
    std::vector<std::uint8_t> payload;
    payload.reserve(vol.labels().size() * type_size(type));
    for (Label l : vol.labels()) {
        switch (type) {
        case NrrdType::UInt8:
            require(l <= 0xFF, "label " + std::to_string(l) + " does not fit uint8");
            put_sample<std::uint8_t>(payload, static_cast<std::uint8_t>(l));
            break;
        case NrrdType::UInt16: put_sample<std::uint16_t>(payload, l); break;
        case NrrdType::Int16:
            require(l <= 0x7FFF, "label " + std::to_string(l) + " does not fit int16");
            put_sample<std::int16_t>(payload, static_cast<std::int16_t>(l));
            break;
        case NrrdType::Float32: break;
        }
    }
    return assemble(header, std::move(payload), encoding);
}

std::vector<std::uint8_t> write_nrrd(const IntensityVolume& vol, NrrdType type, NrrdEncoding encoding)
{
    const std::string header = header_prefix(vol.geometry, type, encoding);
    std::vector<std::uint8_t> payload;
    payload.reserve(vol.values.size() * type_size(type));
    for (double v : vol.values) {
        const double c = std::clamp(v, 0.0, 1.0);
        switch (type) {
        case NrrdType::UInt8: put_sample<std::uint8_t>(payload, static_cast<std::uint8_t>(std::lround(c * 255.0))); break;
        case NrrdType::UInt16:
            put_sample<std::uint16_t>(payload, static_cast<std::uint16_t>(std::lround(c * 65535.0)));
            break;
        case NrrdType::Int16:
            put_sample<std::int16_t>(payload, static_cast<std::int16_t>(std::lround(c * 32767.0)));
            break;
        case NrrdType::Float32: put_sample<float>(payload, static_cast<float>(v)); break;
        }
    }
    return assemble(header, std::move(payload), encoding);
}

LabeledVolume threshold_to_labels(const IntensityVolume& vol, const std::string& segment_name)
{
    SegmentTable table;
    table.add(1, Segment{segment_name, kDefaultSegmentColor, false});
    std::vector<Label> labels(vol.values.size());
    for (std::size_t n = 0; n < labels.size(); ++n) {
        labels[n] = vol.values[n] >= vol.iso_value ? 1 : 0;
    }
    return LabeledVolume(vol.geometry, std::move(labels), std::move(table));
}

} // namespace burrsim
