#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "vivo/error.hpp"
#include "vivo/image.hpp"

namespace vivo {

struct FlowParams {
    double alpha = 1.0;  // smoothness weight, in 8-bit intensity units
    int iterations = 10;

    void validate() const
    {
        if (!(alpha > 0.0))
            throw Error("flow alpha must be positive");
        if (iterations < 1)
            throw Error("flow iterations must be >= 1");
    }
};

/// Dense velocity in pixels/frame. u > 0 is rightwards, v > 0 is downwards.
struct FlowField {
    Plane u;
    Plane v;

    int width() const noexcept { return u.width; }
    int height() const noexcept { return u.height; }
};

struct MotionStats {
    double mean_h = 0.0;
    double mean_v = 0.0;
    double global = 0.0;
    double pan_x = 0.0;
    double pan_y = 0.0;
    /// Bilinear weights over corner channels (-1,-1), (1,-1), (-1,1), (1,1).
    std::array<double, 4> channel_weights{0.25, 0.25, 0.25, 0.25};
};

/// Gray levels are analysed on the 8-bit scale so alpha keeps its usual
/// magnitude relative to image gradients.
inline constexpr double flow_intensity_scale = 255.0;

namespace internal {

struct Derivatives {
    Plane ex, ey, et;
};

// Horn & Schunck first differences averaged over the 2x2x2 cube.
inline Derivatives hs_derivatives(const Plane& a, const Plane& b)
{
    const int w = a.width;
    const int h = a.height;
    Derivatives d{Plane(w, h), Plane(w, h), Plane(w, h)};
    for (int y = 0; y < h; ++y) {
        const int y1 = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int x1 = std::min(x + 1, w - 1);
            const double a00 = a.at(x, y), a10 = a.at(x1, y), a01 = a.at(x, y1), a11 = a.at(x1, y1);
            const double b00 = b.at(x, y), b10 = b.at(x1, y), b01 = b.at(x, y1), b11 = b.at(x1, y1);
            d.ex.at(x, y) = 0.25 * ((a10 - a00) + (a11 - a01) + (b10 - b00) + (b11 - b01));
            d.ey.at(x, y) = 0.25 * ((a01 - a00) + (a11 - a10) + (b01 - b00) + (b11 - b10));
            d.et.at(x, y) = 0.25 * ((b00 - a00) + (b10 - a10) + (b01 - a01) + (b11 - a11));
        }
    }
    return d;
}

// Weighted neighbourhood average: 1/6 for edge neighbours, 1/12 for corners.
inline void hs_average(const Plane& in, Plane& out)
{
    const int w = in.width;
    const int h = in.height;
    for (int y = 0; y < h; ++y) {
        const int ym = std::max(y - 1, 0);
        const int yp = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0);
            const int xp = std::min(x + 1, w - 1);
            out.at(x, y) = (in.at(xm, y) + in.at(xp, y) + in.at(x, ym) + in.at(x, yp)) / 6.0 +
                           (in.at(xm, ym) + in.at(xp, ym) + in.at(xm, yp) + in.at(xp, yp)) / 12.0;
        }
    }
}

} // namespace internal

/// Horn-Schunck optical flow from two gray planes of equal shape.
inline FlowField horn_schunck(const Plane& prev, const Plane& next, const FlowParams& p = {})
{
    p.validate();
    if (prev.width != next.width || prev.height != next.height)
        throw Error("frame size mismatch");
    if (prev.width < 2 || prev.height < 2)
        throw Error("frame too small");

    const int w = prev.width;
    const int h = prev.height;
    const internal::Derivatives d = internal::hs_derivatives(prev, next);

    FlowField flow{Plane(w, h), Plane(w, h)};
    Plane ubar(w, h), vbar(w, h);
    const double alpha2 = p.alpha * p.alpha;

    for (int it = 0; it < p.iterations; ++it) {
        internal::hs_average(flow.u, ubar);
        internal::hs_average(flow.v, vbar);
        for (std::size_t i = 0; i < flow.u.data.size(); ++i) {
            const double ex = d.ex.data[i];
            const double ey = d.ey.data[i];
            const double t = (ex * ubar.data[i] + ey * vbar.data[i] + d.et.data[i]) /
                             (alpha2 + ex * ex + ey * ey);
            flow.u.data[i] = ubar.data[i] - ex * t;
            flow.v.data[i] = vbar.data[i] - ey * t;
        }
    }
    return flow;
}

inline FlowField horn_schunck(const Frame& prev, const Frame& next, const FlowParams& p = {})
{
    if (!prev.same_shape(next))
        throw Error("frame size mismatch");
    return horn_schunck(gray_plane(prev, flow_intensity_scale), gray_plane(next, flow_intensity_scale), p);
}

/// Bilinear partition of unity over the four corner channels.
inline std::array<double, 4> channel_weights(double pan_x, double pan_y) noexcept
{
    const double x = (std::clamp(pan_x, -1.0, 1.0) + 1.0) / 2.0;
    const double y = (std::clamp(pan_y, -1.0, 1.0) + 1.0) / 2.0;
    return {(1.0 - x) * (1.0 - y), x * (1.0 - y), (1.0 - x) * y, x * y};
}

inline constexpr double default_max_displacement = 5.0;

inline MotionStats motion_stats(const FlowField& flow, double max_displacement = default_max_displacement)
{
    if (flow.u.data.empty())
        throw Error("empty flow");
    if (!(max_displacement > 0.0))
        throw Error("max displacement must be positive");

    double abs_u = 0.0, abs_v = 0.0, sum_u = 0.0, sum_v = 0.0;
    for (std::size_t i = 0; i < flow.u.data.size(); ++i) {
        const double u = flow.u.data[i];
        const double v = flow.v.data[i];
        abs_u += std::sqrt(u * u);
        abs_v += std::sqrt(v * v);
        sum_u += u;
        sum_v += v;
    }
    const double n = static_cast<double>(flow.u.data.size());

    MotionStats s;
    s.mean_h = std::min(1.0, abs_u / n / max_displacement);
    s.mean_v = std::min(1.0, abs_v / n / max_displacement);
    s.global = (s.mean_h + s.mean_v) / 2.0;
    s.pan_x = std::clamp(sum_u / n / max_displacement, -1.0, 1.0);
    s.pan_y = std::clamp(sum_v / n / max_displacement, -1.0, 1.0);
    s.channel_weights = channel_weights(s.pan_x, s.pan_y);
    return s;
}

} // namespace vivo
