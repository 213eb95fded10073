#include "burrsim/volume/image_stack.hpp"

#include "burrsim/core/errors.hpp"
#include "burrsim/core/text.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <csetjmp>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace burrsim {

ImageFormat parse_image_format(const std::string& name)
{
    const std::string n = text::to_lower(name);
    if (n == "png") {
        return ImageFormat::Png;
    }
    if (n == "jpeg" || n == "jpg") {
        return ImageFormat::Jpeg;
    }
    fail(ErrorKind::Usage, "unknown image format '" + name + "' (png, jpeg)");
}

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image)
{
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = image.width;
    img.height = image.height;
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        fail(ErrorKind::Io, "cannot write " + path.string() + ": " + msg);
    }
}

void write_png_gray16(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
                      const std::vector<std::uint16_t>& pixels)
{
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = width;
    img.height = height;
    img.format = PNG_FORMAT_LINEAR_Y;
    if (!png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        fail(ErrorKind::Io, "cannot write " + path.string() + ": " + msg);
    }
}

RgbImage read_png_rgb(const std::filesystem::path& path)
{
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        fail(ErrorKind::Io, "cannot read " + path.string() + ": " + img.message);
    }
    img.format = PNG_FORMAT_RGB;
    RgbImage out;
    out.width = img.width;
    out.height = img.height;
    out.pixels.resize(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        fail(ErrorKind::Io, "cannot decode " + path.string() + ": " + msg);
    }
    return out;
}

namespace {

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo)
{
    auto* mgr = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, mgr->message);
    std::longjmp(mgr->jump, 1);
}

// Returns false and fills `error` on failure. Errors longjmp out: no objects with destructors here.
bool jpeg_write_impl(FILE* f, const RgbImage& image, int quality, char* error)
{
    jpeg_compress_struct cinfo;
    JpegErrorManager jerr;
    cinfo.err = jpeg_std_error(&jerr.base);
    jerr.base.error_exit = jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        std::snprintf(error, JMSG_LENGTH_MAX, "%s", jerr.message);
        jpeg_destroy_compress(&cinfo);
        return false;
    }
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, f);
    cinfo.image_width = image.width;
    cinfo.image_height = image.height;
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        auto* row = const_cast<JSAMPLE*>(image.pixels.data() + std::size_t(cinfo.next_scanline) * image.width * 3);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    return true;
}

bool jpeg_read_impl(FILE* f, RgbImage* out, char* error)
{
    jpeg_decompress_struct cinfo;
    JpegErrorManager jerr;
    cinfo.err = jpeg_std_error(&jerr.base);
    jerr.base.error_exit = jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        std::snprintf(error, JMSG_LENGTH_MAX, "%s", jerr.message);
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    out->width = cinfo.output_width;
    out->height = cinfo.output_height;
    out->pixels.resize(std::size_t(out->width) * out->height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPLE* row = out->pixels.data() + std::size_t(cinfo.output_scanline) * out->width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

std::array<std::uint8_t, 3> quantize(const Rgb& c)
{
    auto q = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    return {q(c.r), q(c.g), q(c.b)};
}

std::string vec_line(Vec3 v)
{
    return text::format_double(v.x) + " " + text::format_double(v.y) + " " + text::format_double(v.z);
}

Vec3 parse_vec_line(const std::string& key, const std::string& value)
{
    auto parts = text::split_ws(value);
    if (parts.size() != 3) {
        fail(ErrorKind::Parse, "sidecar key '" + key + "': expected 3 numbers");
    }
    Vec3 v;
    for (std::size_t d = 0; d < 3; ++d) {
        auto x = text::parse_double(parts[d]);
        if (!x) {
            fail(ErrorKind::Parse, "sidecar key '" + key + "': non-numeric '" + std::string(parts[d]) + "'");
        }
        v[d] = *x;
    }
    return v;
}

} // namespace

void write_jpeg_rgb(const std::filesystem::path& path, const RgbImage& image, int quality)
{
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) {
        fail(ErrorKind::Io, "cannot write " + path.string());
    }
    char error[JMSG_LENGTH_MAX] = {0};
    const bool ok = jpeg_write_impl(f, image, quality, error);
    const bool closed = std::fclose(f) == 0;
    if (!ok || !closed) {
        fail(ErrorKind::Io, "cannot write " + path.string() + ": " + error);
    }
}

RgbImage read_jpeg_rgb(const std::filesystem::path& path)
{
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) {
        fail(ErrorKind::Io, "cannot read " + path.string());
    }
    RgbImage out;
    char error[JMSG_LENGTH_MAX] = {0};
    const bool ok = jpeg_read_impl(f, &out, error);
    std::fclose(f);
    if (!ok) {
        fail(ErrorKind::Io, "cannot decode " + path.string() + ": " + error);
    }
    return out;
}

std::string slice_file_name(std::uint32_t k, std::uint32_t slice_count, ImageFormat format)
{
    std::size_t digits = 4;
    for (std::uint32_t n = slice_count > 0 ? slice_count - 1 : 0; n >= 10000; n /= 10) {
        ++digits;
    }
    std::string idx = std::to_string(k);
    idx.insert(0, digits > idx.size() ? digits - idx.size() : 0, '0');
    return "slice_" + idx + (format == ImageFormat::Png ? ".png" : ".jpg");
}

std::size_t export_image_stack(const LabeledVolume& vol, const std::filesystem::path& dir, ImageFormat format)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        fail(ErrorKind::Io, "cannot create output directory " + dir.string());
    }
    const Dims d = vol.dims();

    std::map<Label, std::array<std::uint8_t, 3>> palette;
    for (const auto& [label, seg] : vol.segments().entries()) {
        palette[label] = quantize(seg.color);
    }

    RgbImage img;
    img.width = d.x;
    img.height = d.y;
    img.pixels.resize(std::size_t(d.x) * d.y * 3);
    for (std::uint32_t k = 0; k < d.z; ++k) {
        for (std::uint32_t j = 0; j < d.y; ++j) {
            for (std::uint32_t i = 0; i < d.x; ++i) {
                const Label l = vol.at(i, j, k);
                std::array<std::uint8_t, 3> c{0, 0, 0};
                if (l != 0) {
                    c = palette.at(l);
                }
                std::copy(c.begin(), c.end(), img.pixels.begin() + (std::size_t(j) * d.x + i) * 3);
            }
        }
        const auto path = dir / slice_file_name(k, d.z, format);
        if (format == ImageFormat::Png) {
            write_png_rgb(path, img);
        } else {
            write_jpeg_rgb(path, img);
        }
    }

    std::ofstream meta(dir / kSidecarName, std::ios::trunc);
    if (!meta) {
        fail(ErrorKind::Io, "cannot write sidecar in " + dir.string());
    }
    const auto& g = vol.geometry();
    meta << "# burrsim image stack sidecar\n";
    meta << "version=1\n";
    meta << "format=" << (format == ImageFormat::Png ? "png" : "jpeg") << "\n";
    meta << "dims=" << d.x << " " << d.y << " " << d.z << "\n";
    meta << "spacing=" << vec_line(g.spacing) << "\n";
    meta << "origin=" << vec_line(g.origin) << "\n";
    for (const auto& [label, seg] : vol.segments().entries()) {
        const std::string p = "segment." + std::to_string(label) + ".";
        meta << p << "name=" << seg.name << "\n";
        meta << p << "color=" << vec_line({seg.color.r, seg.color.g, seg.color.b}) << "\n";
        meta << p << "sensitive=" << (seg.sensitive ? 1 : 0) << "\n";
    }
    meta.flush();
    if (!meta) {
        fail(ErrorKind::Io, "cannot write sidecar in " + dir.string());
    }
    return d.z;
}

LabeledVolume import_image_stack(const std::filesystem::path& dir)
{
    std::ifstream in(dir / kSidecarName);
    if (!in) {
        fail(ErrorKind::Io, "missing sidecar " + (dir / kSidecarName).string());
    }
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            fail(ErrorKind::Parse, "sidecar line is not key=value: '" + std::string(t) + "'");
        }
        kv[std::string(t.substr(0, eq))] = std::string(t.substr(eq + 1));
    }
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) {
            fail(ErrorKind::Parse, "sidecar key '" + key + "' missing");
        }
        return it->second;
    };

    const ImageFormat format = parse_image_format(get("format"));
    GridGeometry g;
    const Vec3 dv = parse_vec_line("dims", get("dims"));
    g.dims = {static_cast<std::uint32_t>(dv.x), static_cast<std::uint32_t>(dv.y), static_cast<std::uint32_t>(dv.z)};
    g.spacing = parse_vec_line("spacing", get("spacing"));
    g.origin = parse_vec_line("origin", get("origin"));

    SegmentTable table;
    for (const auto& [key, value] : kv) {
        if (!key.starts_with("segment.") || !key.ends_with(".name")) {
            continue;
        }
        const std::string label_text = key.substr(8, key.size() - 8 - 5);
        auto label = text::parse_int(label_text);
        if (!label || *label < 1 || *label > 0xFFFF) {
            fail(ErrorKind::Parse, "sidecar key '" + key + "': bad label");
        }
        const std::string p = "segment." + label_text + ".";
        Segment seg;
        seg.name = value;
        const Vec3 c = parse_vec_line(p + "color", get(p + "color"));
        seg.color = {c.x, c.y, c.z};
        seg.sensitive = kv.contains(p + "sensitive") && get(p + "sensitive") == "1";
        table.add(static_cast<Label>(*label), std::move(seg));
    }

    std::map<std::array<std::uint8_t, 3>, Label> by_color;
    for (const auto& [label, seg] : table.entries()) {
        const auto q = quantize(seg.color);
        if (q == std::array<std::uint8_t, 3>{0, 0, 0} || by_color.contains(q)) {
            if (format == ImageFormat::Png) {
                fail(ErrorKind::Conflict, "segment " + std::to_string(label) +
                                              " color is not distinguishable after 8-bit quantization");
            }
        }
        by_color.emplace(q, label);
    }

    std::vector<Label> labels(g.dims.count(), 0);
    for (std::uint32_t k = 0; k < g.dims.z; ++k) {
        const auto path = dir / slice_file_name(k, g.dims.z, format);
        const RgbImage img = format == ImageFormat::Png ? read_png_rgb(path) : read_jpeg_rgb(path);
        if (img.width != g.dims.x || img.height != g.dims.y) {
            fail(ErrorKind::Parse, path.string() + " has size " + std::to_string(img.width) + "x" +
                                       std::to_string(img.height) + ", sidecar says " + std::to_string(g.dims.x) +
                                       "x" + std::to_string(g.dims.y));
        }
        for (std::uint32_t j = 0; j < g.dims.y; ++j) {
            for (std::uint32_t i = 0; i < g.dims.x; ++i) {
                const std::uint8_t* px = img.pixels.data() + (std::size_t(j) * g.dims.x + i) * 3;
                const std::array<std::uint8_t, 3> c{px[0], px[1], px[2]};
                Label l = 0;
                if (format == ImageFormat::Png) {
                    if (c != std::array<std::uint8_t, 3>{0, 0, 0}) {
                        auto it = by_color.find(c);
                        if (it == by_color.end()) {
                            fail(ErrorKind::Parse, path.string() + ": pixel (" + std::to_string(i) + "," +
                                                       std::to_string(j) + ") matches no segment color");
                        }
                        l = it->second;
                    }
                } else {
                    // Nearest palette entry, black included.
                    int best = std::abs(int(c[0])) + std::abs(int(c[1])) + std::abs(int(c[2]));
                    for (const auto& [q, label] : by_color) {
                        const int dist = std::abs(int(c[0]) - q[0]) + std::abs(int(c[1]) - q[1]) +
                                         std::abs(int(c[2]) - q[2]);
                        if (dist < best) {
                            best = dist;
                            l = label;
                        }
                    }
                }
                labels[g.linear(i, j, k)] = l;
            }
        }
    }
    return LabeledVolume(g, std::move(labels), std::move(table));
}

} // namespace burrsim
