#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "vivo/error.hpp"
#include "vivo/image.hpp"

namespace vivo {

/// Uniform HSV grid resolution. Hue dominates temperature, so it gets the
/// finest grid; 20 degree cells put the 75/285 degree boundaries near edges.
struct QuantizationParams {
    int h_bins = 18;
    int s_bins = 4;
    int v_bins = 4;

    std::size_t colors() const noexcept
    {
        return static_cast<std::size_t>(h_bins) * static_cast<std::size_t>(s_bins) *
               static_cast<std::size_t>(v_bins);
    }

    void validate() const
    {
        if (h_bins < 1 || s_bins < 1 || v_bins < 1)
            throw Error("quantization bin counts must be >= 1");
    }
};

struct HistogramEntry {
    std::size_t bin = 0;  // h_index * (s_bins * v_bins) + s_index * v_bins + v_index
    HsvPixel center;
    double frequency = 0.0;
};

/// Non-empty bins of a quantized colour histogram, ordered by bin index.
struct ColorHistogram {
    std::vector<HistogramEntry> entries;
};

struct WarmthTerm {
    int t = 1;
    double w = 0.0;
    double theta = 0.0;
};

/// Binary temperature of a hue: cold strictly inside (75, 285), warm otherwise.
inline int color_temperature(double hue_degrees) noexcept
{
    return (hue_degrees > 75.0 && hue_degrees < 285.0) ? -1 : +1;
}

/// Impact of a colour: saturation times value.
inline double weight(double s, double v) noexcept { return s * v; }

inline WarmthTerm warmth_term(const HsvPixel& c) noexcept
{
    WarmthTerm term;
    term.t = color_temperature(c.h);
    term.w = weight(c.s, c.v);
    term.theta = term.t * term.w;
    return term;
}

namespace internal {

inline int cell_index(double value, double span, int bins) noexcept
{
    const int i = static_cast<int>(value / span * bins);
    return std::clamp(i, 0, bins - 1);
}

} // namespace internal

/// Bin index of one HSV colour on the uniform grid.
inline std::size_t hsv_bin(const HsvPixel& c, const QuantizationParams& q) noexcept
{
    const int hi = internal::cell_index(c.h, 360.0, q.h_bins);
    const int si = internal::cell_index(c.s, 1.0, q.s_bins);
    const int vi = internal::cell_index(c.v, 1.0, q.v_bins);
    return (static_cast<std::size_t>(hi) * q.s_bins + si) * q.v_bins + vi;
}

/// Arithmetic centre of a grid cell.
inline HsvPixel bin_center(std::size_t bin, const QuantizationParams& q) noexcept
{
    const std::size_t vi = bin % q.v_bins;
    const std::size_t si = (bin / q.v_bins) % q.s_bins;
    const std::size_t hi = bin / (static_cast<std::size_t>(q.v_bins) * q.s_bins);
    return {(static_cast<double>(hi) + 0.5) * 360.0 / q.h_bins,
            (static_cast<double>(si) + 0.5) / q.s_bins,
            (static_cast<double>(vi) + 0.5) / q.v_bins};
}

inline ColorHistogram quantize_hsv(const Frame& f, const QuantizationParams& q = {})
{
    q.validate();
    if (f.empty())
        throw Error("degenerate frame");

    std::vector<std::size_t> counts(q.colors(), 0);
    for (const Rgb& p : f.pixels())
        ++counts[hsv_bin(rgb_to_hsv(p), q)];

    ColorHistogram hist;
    const double n = static_cast<double>(f.size());
    for (std::size_t bin = 0; bin < counts.size(); ++bin) {
        if (counts[bin] == 0)
            continue;
        hist.entries.push_back({bin, bin_center(bin, q), static_cast<double>(counts[bin]) / n});
    }
    return hist;
}

/// Global image warmth in [-1, 1]: sum over histogram colours of
/// frequency * temperature(hue) * saturation * value, at the bin centres.
inline double warmth(const ColorHistogram& hist) noexcept
{
    double theta = 0.0;
    for (const HistogramEntry& e : hist.entries)
        theta += e.frequency * warmth_term(e.center).theta;
    return std::clamp(theta, -1.0, 1.0);
}

inline double warmth(const Frame& f, const QuantizationParams& q = {})
{
    return warmth(quantize_hsv(f, q));
}

} // namespace vivo
