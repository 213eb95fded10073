#include "../support.hpp"

#include "burrsim/core/compress.hpp"
#include "burrsim/volume/image_stack.hpp"
#include "burrsim/volume/nrrd.hpp"

#include <bit>
#include <fstream>

using namespace burrsim;
using burrsim::test::TempDir;
using burrsim::test::error_kind_of;

namespace {

std::filesystem::path fixture(const std::string& name)
{
    return std::filesystem::path(BURRSIM_FIXTURE_DIR) / name;
}

// Reference digest spelled out byte by byte.
std::uint64_t oracle_digest(const GridGeometry& g, const std::vector<Label>& labels)
{
    std::vector<std::uint8_t> bytes;
    auto put64 = [&](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            bytes.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
        }
    };
    put64(g.dims.x);
    put64(g.dims.y);
    put64(g.dims.z);
    put64(std::bit_cast<std::uint64_t>(g.spacing.x));
    put64(std::bit_cast<std::uint64_t>(g.spacing.y));
    put64(std::bit_cast<std::uint64_t>(g.spacing.z));
    for (Label l : labels) {
        bytes.push_back(static_cast<std::uint8_t>(l & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>(l >> 8));
    }
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

LabeledVolume random_labels(Dims d, std::uint32_t seed, Label max_label)
{
    SegmentTable t;
    const char* names[] = {"Bone", "Dura", "FacialNerve", "Sinus"};
    const Rgb colors[] = {{0.9, 0.85, 0.7}, {0.2, 0.4, 0.9}, {1.0, 1.0, 0.0}, {0.6, 0.1, 0.1}};
    for (Label l = 1; l <= max_label; ++l) {
        t.add(l, Segment{names[l - 1], colors[l - 1], false});
    }
    GridGeometry g{d, Vec3{0.5, 0.25, 1.5}, Vec3{-3.0, 4.0, 0.5}};
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> u(0, max_label);
    std::vector<Label> labels(d.count());
    for (auto& l : labels) {
        l = static_cast<Label>(u(rng));
    }
    return LabeledVolume(g, std::move(labels), std::move(t));
}

} // namespace

TEST(Volume, DigestMatchesOracle)
{
    auto vol = random_labels(Dims{5, 4, 3}, 1, 3);
    std::vector<Label> labels(vol.labels().begin(), vol.labels().end());
    EXPECT_EQ(grid_digest(vol), oracle_digest(vol.geometry(), labels));
}

TEST(Volume, DigestIgnoresOriginButSeesEverythingElse)
{
    auto a = random_labels(Dims{6, 5, 4}, 2, 2);
    GridGeometry moved = a.geometry();
    moved.origin = Vec3{100, 100, 100};
    std::vector<Label> labels(a.labels().begin(), a.labels().end());
    EXPECT_EQ(grid_digest(moved, labels), grid_digest(a));

    GridGeometry respaced = a.geometry();
    respaced.spacing.x = 0.5000001;
    EXPECT_NE(grid_digest(respaced, labels), grid_digest(a));

    labels[17] = labels[17] == 0 ? 1 : 0;
    EXPECT_NE(grid_digest(a.geometry(), labels), grid_digest(a));
}

TEST(Volume, DigestHexRoundTrip)
{
    EXPECT_EQ(digest_hex(0x00ab), "00000000000000ab");
    EXPECT_EQ(parse_digest_hex("00000000000000ab"), 0xabu);
    EXPECT_EQ(error_kind_of([] { (void)parse_digest_hex("xyz"); }), ErrorKind::Parse);
}

TEST(Volume, IndexingAndGeometry)
{
    GridGeometry g{Dims{4, 3, 2}, Vec3{0.5, 0.5, 2.0}, Vec3{1, 2, 3}};
    EXPECT_EQ(g.linear(1, 2, 1), 1u + 4u * (2u + 3u * 1u));
    for (std::size_t n = 0; n < g.dims.count(); ++n) {
        EXPECT_EQ(g.linear(g.unlinear(n)), n);
    }
    EXPECT_EQ(g.voxel_to_world(VoxelIndex{2, 0, 1}), (Vec3{2.0, 2.0, 5.0}));
    EXPECT_EQ(g.extent(), (Vec3{2.0, 1.5, 4.0}));
}

TEST(Volume, SegmentTableRejectsConflicts)
{
    SegmentTable t;
    t.add(1, Segment{"Bone"});
    EXPECT_EQ(error_kind_of([&] { t.add(1, Segment{"Other"}); }), ErrorKind::Conflict);
    EXPECT_EQ(error_kind_of([&] { t.add(2, Segment{"Bone"}); }), ErrorKind::Conflict);
    EXPECT_EQ(error_kind_of([&] { t.add(0, Segment{"Air"}); }), ErrorKind::Conflict);
}

TEST(Volume, UnknownLabelIsContractViolation)
{
    GridGeometry g{Dims{2, 1, 1}, Vec3{1, 1, 1}, Vec3{}};
    EXPECT_EQ(error_kind_of([&] { LabeledVolume(g, {0, 3}, test::bone_table()); }), ErrorKind::Contract);
}

TEST(Nrrd, SegFixtureYieldsExactSegmentTable)
{
    auto parsed = read_nrrd(fixture("seg.nrrd"));
    ASSERT_TRUE(std::holds_alternative<LabeledVolume>(parsed));
    const auto& vol = std::get<LabeledVolume>(parsed);

    SegmentTable want;
    want.add(1, Segment{"Bone", Rgb{0.945098, 0.839216, 0.568627}, false});
    want.add(4, Segment{"FacialNerve", Rgb{1, 1, 0}, false});
    want.add(2, Segment{"Dura", Rgb{0.2, 0.4, 0.9}, false});
    EXPECT_EQ(vol.segments(), want);

    EXPECT_EQ(vol.dims(), (Dims{4, 3, 2}));
    EXPECT_EQ(vol.geometry().spacing, (Vec3{0.5, 0.5, 1.25}));
    EXPECT_EQ(vol.geometry().origin, (Vec3{-10, 20.5, 3}));
    EXPECT_EQ(vol.at(1, 0, 0), 1);
    EXPECT_EQ(vol.at(1, 2, 0), 4);
    EXPECT_EQ(vol.at(0, 0, 1), 2);
    EXPECT_EQ(vol.at(2, 1, 1), 4);
    EXPECT_EQ(vol.label_histogram().at(1), 8u);
}

TEST(Nrrd, TruncatedPayloadNamesByteCounts)
{
    auto bytes = read_file(fixture("seg.nrrd"));
    bytes.resize(bytes.size() - 5);
    try {
        (void)parse_nrrd(bytes);
        FAIL() << "expected truncation";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Truncated);
        EXPECT_NE(std::string(e.what()).find("expected 24 bytes, got 19"), std::string::npos) << e.what();
    }
}

TEST(Nrrd, HeaderErrorsNameTheField)
{
    const std::string text = "NRRD0004\ntype: uint8\ndimension: 3\nsizes: 2 2\nencoding: raw\n\n";
    std::vector<std::uint8_t> b(text.begin(), text.end());
    try {
        (void)parse_nrrd(b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("sizes"), std::string::npos);
    }
    const std::string dbl = "NRRD0004\ntype: double\ndimension: 3\nsizes: 1 1 1\nencoding: raw\n\n";
    std::vector<std::uint8_t> d(dbl.begin(), dbl.end());
    EXPECT_EQ(error_kind_of([&] { (void)parse_nrrd(d); }), ErrorKind::Unsupported);
    const std::string four = "NRRD0004\ntype: uint8\ndimension: 4\nsizes: 2 1 1 1\nencoding: raw\n"
                             "Segment0_LabelValue:=1\n\n";
    std::vector<std::uint8_t> f(four.begin(), four.end());
    EXPECT_EQ(error_kind_of([&] { (void)parse_nrrd(f); }), ErrorKind::Unsupported);
}

std::string nrrd_param_name(const ::testing::TestParamInfo<std::tuple<NrrdType, NrrdEncoding>>& info)
{
    std::string n = std::string(to_string(std::get<0>(info.param))) + "_" + std::string(to_string(std::get<1>(info.param)));
    std::erase_if(n, [](char c) { return !std::isalnum(static_cast<unsigned char>(c)) && c != '_'; });
    return n;
}

class NrrdLabelRoundTrip : public ::testing::TestWithParam<std::tuple<NrrdType, NrrdEncoding>> {};

TEST_P(NrrdLabelRoundTrip, Identity)
{
    const auto [type, encoding] = GetParam();
    auto vol = random_labels(Dims{7, 5, 3}, 3, 4);
    vol.segments().set_sensitive(3, true);
    auto parsed = parse_nrrd(write_nrrd(vol, type, encoding));
    ASSERT_TRUE(std::holds_alternative<LabeledVolume>(parsed));
    EXPECT_EQ(std::get<LabeledVolume>(parsed), vol);
}

INSTANTIATE_TEST_SUITE_P(AllIntegerTypes, NrrdLabelRoundTrip,
                         ::testing::Combine(::testing::Values(NrrdType::UInt8, NrrdType::UInt16, NrrdType::Int16),
                                            ::testing::Values(NrrdEncoding::Raw, NrrdEncoding::Gzip)),
                         nrrd_param_name);

class NrrdIntensityRoundTrip : public ::testing::TestWithParam<std::tuple<NrrdType, NrrdEncoding>> {};

TEST_P(NrrdIntensityRoundTrip, Identity)
{
    const auto [type, encoding] = GetParam();
    double q = 0.0;
    switch (type) {
    case NrrdType::UInt8: q = 255.0; break;
    case NrrdType::UInt16: q = 65535.0; break;
    case NrrdType::Int16: q = 32767.0; break;
    case NrrdType::Float32: q = 1024.0; break;
    }
    IntensityVolume iv;
    iv.geometry = GridGeometry{Dims{6, 4, 3}, Vec3{0.25, 0.5, 0.75}, Vec3{1, -2, 3}};
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> u(0, static_cast<int>(q));
    iv.values.resize(iv.geometry.dims.count());
    for (auto& v : iv.values) {
        v = u(rng) / q;
    }
    iv.values[0] = 0.0;
    iv.values[1] = 1.0;
    auto parsed = parse_nrrd(write_nrrd(iv, type, encoding));
    ASSERT_TRUE(std::holds_alternative<IntensityVolume>(parsed));
    const auto& back = std::get<IntensityVolume>(parsed);
    EXPECT_EQ(back.geometry, iv.geometry);
    EXPECT_EQ(back.values, iv.values);
}

INSTANTIATE_TEST_SUITE_P(AllTypes, NrrdIntensityRoundTrip,
                         ::testing::Combine(::testing::Values(NrrdType::UInt8, NrrdType::UInt16, NrrdType::Int16,
                                                              NrrdType::Float32),
                                            ::testing::Values(NrrdEncoding::Raw, NrrdEncoding::Gzip)),
                         nrrd_param_name);

TEST(Nrrd, ThresholdBinarizes)
{
    IntensityVolume iv;
    iv.geometry = GridGeometry{Dims{3, 1, 1}, Vec3{1, 1, 1}, Vec3{}};
    iv.values = {0.1, 0.5, 0.9};
    auto vol = threshold_to_labels(iv);
    EXPECT_EQ(vol.at(0, 0, 0), 0);
    EXPECT_EQ(vol.at(1, 0, 0), 1);
    EXPECT_EQ(vol.at(2, 0, 0), 1);
}

TEST(ImageStack, PngExportImportIdentity)
{
    TempDir tmp;
    auto vol = random_labels(Dims{9, 7, 5}, 4, 4);
    vol.segments().set_sensitive(3, true);
    EXPECT_EQ(export_image_stack(vol, tmp.path(), ImageFormat::Png), 5u);
    EXPECT_TRUE(std::filesystem::exists(tmp / kSidecarName));
    EXPECT_EQ(import_image_stack(tmp.path()), vol);
}

TEST(ImageStack, JpegMapsToNearestSegmentColor)
{
    TempDir tmp;
    auto vol = random_labels(Dims{16, 16, 2}, 5, 2);
    export_image_stack(vol, tmp.path(), ImageFormat::Jpeg);
    auto back = import_image_stack(tmp.path());
    EXPECT_EQ(back.segments(), vol.segments());
    std::size_t same = 0;
    for (std::size_t n = 0; n < vol.labels().size(); ++n) {
        same += back.labels()[n] == vol.labels()[n];
    }
    EXPECT_GT(same, vol.labels().size() * 8 / 10);
}

TEST(ImageStack, MissingSidecarIsIoError)
{
    TempDir tmp;
    EXPECT_EQ(error_kind_of([&] { (void)import_image_stack(tmp.path()); }), ErrorKind::Io);
}
