#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vivo/error.hpp"

namespace vivo {

/// One pixel, channels normalized to [0,1].
struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct HsvPixel {
    double h = 0.0; // degrees, [0,360)
    double s = 0.0;
    double v = 0.0;
};

/// A decoded video image. Row-major, interleaved RGB, channels in [0,1].
///
/// A default-constructed frame is empty (0x0); every analysis rejects it
/// with "degenerate frame" or "frame too small".
class Frame {
public:
    Frame() = default;

    Frame(int width, int height, std::vector<Rgb> pixels, double timestamp_ms = 0.0)
        : width_(width), height_(height), pixels_(std::move(pixels)), timestamp_ms_(timestamp_ms)
    {
        if (width < 0 || height < 0 || (width == 0) != (height == 0))
            throw Error("invalid frame dimensions");
        if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw Error("pixel count does not match dimensions");
        if (timestamp_ms < 0.0)
            throw Error("negative timestamp");
        for (const Rgb& p : pixels_) {
            if (!(in_unit(p.r) && in_unit(p.g) && in_unit(p.b)))
                throw Error("channel value outside [0,1]");
        }
    }

    static Frame uniform(int width, int height, Rgb color, double timestamp_ms = 0.0)
    {
        return Frame(width, height,
                     std::vector<Rgb>(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), color),
                     timestamp_ms);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }
    double timestamp_ms() const noexcept { return timestamp_ms_; }
    void set_timestamp_ms(double t) noexcept { timestamp_ms_ = t; }

    std::span<const Rgb> pixels() const noexcept { return pixels_; }

    const Rgb& at(int x, int y) const noexcept
    {
        return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
    }

    /// Edge-replicated access; coordinates outside the frame clamp to the border.
    const Rgb& clamped(int x, int y) const noexcept
    {
        return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
    }

    bool same_shape(const Frame& other) const noexcept
    {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    static bool in_unit(double c) noexcept { return c >= 0.0 && c <= 1.0; }

    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
    double timestamp_ms_ = 0.0;
};

/// Single-channel real plane, row-major.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill)
    {
    }

    double& at(int x, int y) noexcept { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const noexcept { return data[static_cast<std::size_t>(y) * width + x]; }
    double clamped(int x, int y) const noexcept
    {
        return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
    }
};

// ---------------------------------------------------------------------------
// Colour conversions
// ---------------------------------------------------------------------------

/// Standard hexcone RGB -> HSV. Achromatic pixels get hue 0.
inline HsvPixel rgb_to_hsv(const Rgb& p) noexcept
{
    const double mx = std::max({p.r, p.g, p.b});
    const double mn = std::min({p.r, p.g, p.b});
    const double chroma = mx - mn;

    HsvPixel out;
    out.v = mx;
    out.s = mx > 0.0 ? chroma / mx : 0.0;
    if (chroma <= 0.0 || out.s == 0.0) {
        out.h = 0.0;
        return out;
    }

    double h;
    if (mx == p.r)
        h = std::fmod((p.g - p.b) / chroma, 6.0);
    else if (mx == p.g)
        h = (p.b - p.r) / chroma + 2.0;
    else
        h = (p.r - p.g) / chroma + 4.0;
    h *= 60.0;
    if (h < 0.0)
        h += 360.0;
    if (h >= 360.0)
        h -= 360.0;
    out.h = h;
    return out;
}

inline Rgb hsv_to_rgb(const HsvPixel& p) noexcept
{
    const double c = p.v * p.s;
    const double hp = std::fmod(p.h, 360.0) / 60.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    const double m = p.v - c;

    double r = 0.0, g = 0.0, b = 0.0;
    switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
    }
    return {r + m, g + m, b + m};
}

/// HSL lightness: (max + min) / 2.
inline double lightness(const Rgb& p) noexcept
{
    return 0.5 * (std::max({p.r, p.g, p.b}) + std::min({p.r, p.g, p.b}));
}

/// Gray level used by the spectral and motion analyses: mean of R, G, B.
inline double gray(const Rgb& p) noexcept { return (p.r + p.g + p.b) / 3.0; }

inline double mean_luminance(const Frame& f)
{
    if (f.empty())
        throw Error("degenerate frame");
    double sum = 0.0;
    for (const Rgb& p : f.pixels())
        sum += lightness(p);
    return std::clamp(sum / static_cast<double>(f.size()), 0.0, 1.0);
}

inline Plane gray_plane(const Frame& f, double scale = 1.0)
{
    Plane out(f.width(), f.height());
    const auto px = f.pixels();
    for (std::size_t i = 0; i < px.size(); ++i)
        out.data[i] = scale * gray(px[i]);
    return out;
}

/// Extracts one colour channel (0 = R, 1 = G, 2 = B) as a plane.
inline Plane channel_plane(const Frame& f, int channel)
{
    Plane out(f.width(), f.height());
    const auto px = f.pixels();
    for (std::size_t i = 0; i < px.size(); ++i)
        out.data[i] = channel == 0 ? px[i].r : channel == 1 ? px[i].g : px[i].b;
    return out;
}

// ---------------------------------------------------------------------------
// Ingestion of packed 8-bit frames
// ---------------------------------------------------------------------------

enum class PixelFormat { rgb24, rgba };

inline std::size_t bytes_per_pixel(PixelFormat fmt) noexcept
{
    return fmt == PixelFormat::rgb24 ? 3 : 4;
}

inline PixelFormat parse_pixel_format(std::string_view name)
{
    if (name == "rgb24")
        return PixelFormat::rgb24;
    if (name == "rgba" || name == "rgba32")
        return PixelFormat::rgba;
    throw Error("unsupported pixel format: " + std::string(name));
}

inline std::string_view to_string(PixelFormat fmt) noexcept
{
    return fmt == PixelFormat::rgb24 ? "rgb24" : "rgba";
}

/// Builds a frame from packed 8-bit samples. Alpha, when present, is dropped.
inline Frame frame_from_packed(std::span<const std::uint8_t> bytes, int width, int height,
                               PixelFormat fmt, double timestamp_ms = 0.0)
{
    if (width <= 0 || height <= 0)
        throw Error("invalid frame dimensions");
    const std::size_t bpp = bytes_per_pixel(fmt);
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() != count * bpp)
        throw Error("packed frame has wrong byte count");

    std::vector<Rgb> px(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint8_t* s = bytes.data() + i * bpp;
        px[i] = {s[0] / 255.0, s[1] / 255.0, s[2] / 255.0};
    }
    return Frame(width, height, std::move(px), timestamp_ms);
}

/// Packs a frame back to rgb24 (rounded to nearest). Used by tools and tests.
inline std::vector<std::uint8_t> frame_to_rgb24(const Frame& f)
{
    std::vector<std::uint8_t> out;
    out.reserve(f.size() * 3);
    auto q = [](double c) { return static_cast<std::uint8_t>(std::lround(c * 255.0)); };
    for (const Rgb& p : f.pixels()) {
        out.push_back(q(p.r));
        out.push_back(q(p.g));
        out.push_back(q(p.b));
    }
    return out;
}

} // namespace vivo
