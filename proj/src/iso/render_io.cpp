#include "burrsim/iso/render.hpp"

#include "burrsim/core/errors.hpp"
#include "burrsim/core/text.hpp"
#include "burrsim/volume/image_stack.hpp"

#include <cmath>

namespace burrsim {

namespace {

std::vector<double> parse_numbers(std::string_view part, std::size_t expected, const std::string& what)
{
    std::vector<double> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= part.size(); ++i) {
        if (i == part.size() || part[i] == ',') {
            auto v = text::parse_double(part.substr(start, i - start));
            if (!v) {
                fail(ErrorKind::Usage, "camera spec " + what + ": bad number '" +
                                           std::string(part.substr(start, i - start)) + "'");
            }
            out.push_back(*v);
            start = i + 1;
        }
    }
    if (out.size() != expected) {
        fail(ErrorKind::Usage, "camera spec " + what + ": expected " + std::to_string(expected) + " numbers");
    }
    return out;
}

} // namespace

OrthoCamera parse_camera_spec(const std::string& spec)
{
    std::vector<std::string_view> parts;
    std::string_view s(spec);
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == ':') {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    if (parts.size() != 4) {
        fail(ErrorKind::Usage, "camera spec must be 'cx,cy,cz:dx,dy,dz:ux,uy,uz:width,height'");
    }
    OrthoCamera cam;
    auto c = parse_numbers(parts[0], 3, "center");
    auto d = parse_numbers(parts[1], 3, "view direction");
    auto u = parse_numbers(parts[2], 3, "up");
    auto e = parse_numbers(parts[3], 2, "extent");
    cam.center = {c[0], c[1], c[2]};
    cam.view_dir = {d[0], d[1], d[2]};
    cam.up = {u[0], u[1], u[2]};
    cam.width_mm = e[0];
    cam.height_mm = e[1];
    return cam;
}

void write_depth_png(const std::filesystem::path& path, const GroundTruthMaps& maps)
{
    std::vector<std::uint16_t> px(maps.depth_mm.size());
    for (std::size_t n = 0; n < px.size(); ++n) {
        const double d = maps.depth_mm[n];
        if (!std::isfinite(d)) {
            px[n] = 0xFFFF;
        } else {
            px[n] = static_cast<std::uint16_t>(std::clamp(std::llround(d / kDepthPngUnitMm), 0LL, 0xFFFELL));
        }
    }
    write_png_gray16(path, maps.width, maps.height, px);
}

void write_label_png(const std::filesystem::path& path, const GroundTruthMaps& maps)
{
    std::vector<std::uint16_t> px(maps.labels.begin(), maps.labels.end());
    write_png_gray16(path, maps.width, maps.height, px);
}

void write_normal_png(const std::filesystem::path& path, const GroundTruthMaps& maps)
{
    RgbImage img;
    img.width = maps.width;
    img.height = maps.height;
    img.pixels.resize(maps.normals.size() * 3);
    for (std::size_t n = 0; n < maps.normals.size(); ++n) {
        for (std::size_t a = 0; a < 3; ++a) {
            const double c = maps.normals[n][a];
            img.pixels[n * 3 + a] = static_cast<std::uint8_t>(std::lround(std::clamp((c + 1.0) * 0.5, 0.0, 1.0) * 255.0));
        }
    }
    write_png_rgb(path, img);
}

} // namespace burrsim
