#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <span>
#include <vector>

#include "vivo/error.hpp"
#include "vivo/fft.hpp"
#include "vivo/image.hpp"

namespace vivo {

/// DC-centred magnitude spectrum of the gray plane, normalized by pixel
/// count (the DC cell holds the mean gray level).
struct Spectrum {
    Plane magnitude;

    int width() const noexcept { return magnitude.width; }
    int height() const noexcept { return magnitude.height; }
    int center_x() const noexcept { return magnitude.width / 2; }
    int center_y() const noexcept { return magnitude.height / 2; }
    double dc() const noexcept { return magnitude.at(center_x(), center_y()); }
};

/// A frequency band in normalized units: 0 is DC, 1 is Nyquist.
struct Band {
    double offset = 0.0;
    double width = 0.25;

    void validate() const
    {
        if (!(offset >= 0.0 && offset <= 1.0) || !(width > 0.0 && width <= 1.0) ||
            offset + width > 1.0 + 1e-9)
            throw Error("invalid band");
    }
};

inline std::vector<Band> default_bands()
{
    return {{0.0, 0.25}, {0.25, 0.25}, {0.5, 0.25}, {0.75, 0.25}};
}

inline Spectrum dft_magnitude(const Frame& f)
{
    if (f.width() < 2 || f.height() < 2)
        throw Error("frame too small");

    const int w = f.width();
    const int h = f.height();
    const Plane g = gray_plane(f);
    const std::vector<Complex> bins = dft2(g.data, w, h);
    const double norm = 1.0 / static_cast<double>(f.size());

    Spectrum s{Plane(w, h)};
    for (int y = 0; y < h; ++y) {
        const int sy = (y + h / 2) % h;
        for (int x = 0; x < w; ++x) {
            const int sx = (x + w / 2) % w;
            s.magnitude.at(sx, sy) = std::abs(bins[static_cast<std::size_t>(y) * w + x]) * norm;
        }
    }
    return s;
}

namespace internal {

/// Whether a cell at `distance` from the centre (in cells) lies in the band
/// along an axis whose Nyquist distance is `half`. The upper edge is
/// exclusive except when the band reaches Nyquist.
inline bool in_band(int distance, double half, const Band& b) noexcept
{
    const double r = static_cast<double>(distance) / half;
    const double hi = b.offset + b.width;
    constexpr double eps = 1e-9;
    if (r < b.offset - eps)
        return false;
    if (hi >= 1.0 - eps)
        return r <= hi + eps;
    return r < hi - eps;
}

} // namespace internal

/// Mean magnitude over the union of the vertical strip (columns whose
/// horizontal frequency lies in the band, all rows) and the horizontal
/// strip (rows whose vertical frequency lies in the band, all columns).
/// The DC cell never contributes.
inline double band_mean(const Spectrum& s, const Band& b)
{
    b.validate();
    const int w = s.width();
    const int h = s.height();
    const int cx = s.center_x();
    const int cy = s.center_y();
    const double half_w = w / 2.0;
    const double half_h = h / 2.0;

    std::vector<char> col_in(static_cast<std::size_t>(w));
    std::vector<char> row_in(static_cast<std::size_t>(h));
    for (int x = 0; x < w; ++x)
        col_in[x] = internal::in_band(std::abs(x - cx), half_w, b);
    for (int y = 0; y < h; ++y)
        row_in[y] = internal::in_band(std::abs(y - cy), half_h, b);

    double sum = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!(col_in[x] || row_in[y]) || (x == cx && y == cy))
                continue;
            sum += s.magnitude.at(x, y);
            ++count;
        }
    }
    if (count == 0)
        throw Error("empty band");
    return sum / static_cast<double>(count);
}

struct DetailResult {
    double overall = 0.0;
    std::vector<double> per_band;
};

inline constexpr double default_detail_gain = 20.0;

/// Spectral detail: each band mean relative to the DC level, times `gain`,
/// clipped to 1; overall is the mean over bands.
inline DetailResult detail(const Spectrum& s, std::span<const Band> bands, double gain = default_detail_gain)
{
    if (bands.empty())
        throw Error("no bands");
    if (!(gain > 0.0))
        throw Error("detail gain must be positive");

    constexpr double eps = 1e-9;
    const double dc = std::max(s.dc(), eps);

    DetailResult r;
    r.per_band.reserve(bands.size());
    double total = 0.0;
    for (const Band& b : bands) {
        const double v = std::min(1.0, gain * band_mean(s, b) / dc);
        r.per_band.push_back(v);
        total += v;
    }
    r.overall = total / static_cast<double>(bands.size());
    return r;
}

inline DetailResult detail(const Frame& f, std::span<const Band> bands, double gain = default_detail_gain)
{
    return detail(dft_magnitude(f), bands, gain);
}

} // namespace vivo
