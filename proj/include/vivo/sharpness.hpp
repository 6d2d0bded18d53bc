#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "vivo/error.hpp"
#include "vivo/image.hpp"

namespace vivo {

/// Per-channel Sobel gradient magnitude, each value in [0,1].
struct EdgeMap {
    std::array<Plane, 3> channels;

    int width() const noexcept { return channels[0].width; }
    int height() const noexcept { return channels[0].height; }
};

/// Largest |(Gx, Gy)| the standard 3x3 kernels reach on [0,1] data.
inline constexpr double sobel_max_magnitude = 4.0 * std::numbers::sqrt2;

/// Standard 3x3 Sobel on each RGB plane with replicated borders. Magnitudes
/// are divided by sobel_max_magnitude and clipped to 1.
inline EdgeMap sobel_magnitude(const Frame& f)
{
    if (f.width() < 3 || f.height() < 3)
        throw Error("frame too small");

    const int w = f.width();
    const int h = f.height();
    EdgeMap out{{Plane(w, h), Plane(w, h), Plane(w, h)}};

    for (int y = 0; y < h; ++y) {
        const int ym = std::max(y - 1, 0);
        const int yp = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0);
            const int xp = std::min(x + 1, w - 1);

            const Rgb& a = f.at(xm, ym);
            const Rgb& b = f.at(x, ym);
            const Rgb& c = f.at(xp, ym);
            const Rgb& d = f.at(xm, y);
            const Rgb& e = f.at(xp, y);
            const Rgb& g = f.at(xm, yp);
            const Rgb& k = f.at(x, yp);
            const Rgb& m = f.at(xp, yp);

            auto mag = [&](double Rgb::*ch) {
                const double gx = (c.*ch + 2.0 * e.*ch + m.*ch) - (a.*ch + 2.0 * d.*ch + g.*ch);
                const double gy = (g.*ch + 2.0 * k.*ch + m.*ch) - (a.*ch + 2.0 * b.*ch + c.*ch);
                return std::min(1.0, std::sqrt(gx * gx + gy * gy) / sobel_max_magnitude);
            };
            out.channels[0].at(x, y) = mag(&Rgb::r);
            out.channels[1].at(x, y) = mag(&Rgb::g);
            out.channels[2].at(x, y) = mag(&Rgb::b);
        }
    }
    return out;
}

inline double plane_mean(const Plane& p) noexcept
{
    double sum = 0.0;
    for (double v : p.data)
        sum += v;
    return p.data.empty() ? 0.0 : sum / static_cast<double>(p.data.size());
}

/// Blur-to-sharp factor: the largest per-channel mean edge magnitude.
inline double sharpness(const EdgeMap& edges) noexcept
{
    double best = 0.0;
    for (const Plane& p : edges.channels)
        best = std::max(best, plane_mean(p));
    return std::clamp(best, 0.0, 1.0);
}

inline double sharpness(const Frame& f) { return sharpness(sobel_magnitude(f)); }

} // namespace vivo
