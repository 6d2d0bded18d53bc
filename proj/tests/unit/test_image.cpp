#include <gtest/gtest.h>

#include "support/synthetic.hpp"
#include "vivo/image.hpp"

using namespace vivo;

TEST(Frame, RejectsBadShapes)
{
    EXPECT_THROW(Frame(0, 4, {}), Error);
    EXPECT_THROW(Frame(2, 2, std::vector<Rgb>(3)), Error);
    EXPECT_THROW(Frame(1, 1, {Rgb{1.5, 0.0, 0.0}}), Error);
    EXPECT_THROW(Frame(1, 1, {Rgb{0.0, 0.0, 0.0}}, -1.0), Error);
    EXPECT_NO_THROW(Frame(1, 1, {Rgb{1.0, 0.0, 0.0}}));
}

TEST(Frame, MeanLuminanceOfEmptyFrameIsDegenerate)
{
    EXPECT_THROW(mean_luminance(Frame{}), Error);
}

TEST(Hsv, PrimaryHues)
{
    EXPECT_DOUBLE_EQ(rgb_to_hsv({1, 0, 0}).h, 0.0);
    EXPECT_DOUBLE_EQ(rgb_to_hsv({0, 1, 0}).h, 120.0);
    EXPECT_DOUBLE_EQ(rgb_to_hsv({0, 0, 1}).h, 240.0);
    EXPECT_DOUBLE_EQ(rgb_to_hsv({1, 0, 1}).h, 300.0);
    const HsvPixel gray = rgb_to_hsv({0.4, 0.4, 0.4});
    EXPECT_EQ(gray.h, 0.0);
    EXPECT_EQ(gray.s, 0.0);
    EXPECT_DOUBLE_EQ(gray.v, 0.4);
}

TEST(Hsv, RoundTrip)
{
    synth::Rng rng(3);
    for (int k = 0; k < 1000; ++k) {
        const Rgb p{rng.uniform(), rng.uniform(), rng.uniform()};
        const Rgb q = hsv_to_rgb(rgb_to_hsv(p));
        EXPECT_NEAR(p.r, q.r, 1e-12);
        EXPECT_NEAR(p.g, q.g, 1e-12);
        EXPECT_NEAR(p.b, q.b, 1e-12);
    }
}

TEST(PackedFrames, Rgb24AndRgbaDecode)
{
    const std::vector<std::uint8_t> rgb{255, 0, 51, 0, 255, 0};
    const Frame f = frame_from_packed(rgb, 2, 1, PixelFormat::rgb24);
    EXPECT_DOUBLE_EQ(f.at(0, 0).r, 1.0);
    EXPECT_DOUBLE_EQ(f.at(0, 0).b, 0.2);
    EXPECT_DOUBLE_EQ(f.at(1, 0).g, 1.0);

    const std::vector<std::uint8_t> rgba{255, 0, 51, 7, 0, 255, 0, 200};
    const Frame g = frame_from_packed(rgba, 2, 1, PixelFormat::rgba);
    EXPECT_EQ(g.at(0, 0), f.at(0, 0));
    EXPECT_EQ(g.at(1, 0), f.at(1, 0));

    EXPECT_THROW(frame_from_packed(rgb, 2, 2, PixelFormat::rgb24), Error);
    EXPECT_EQ(frame_to_rgb24(f), rgb);
}

TEST(PackedFrames, PixelFormatNames)
{
    EXPECT_EQ(parse_pixel_format("rgb24"), PixelFormat::rgb24);
    EXPECT_EQ(parse_pixel_format("rgba"), PixelFormat::rgba);
    EXPECT_THROW(parse_pixel_format("yuv420p"), Error);
    EXPECT_EQ(bytes_per_pixel(PixelFormat::rgba), 4u);
}
