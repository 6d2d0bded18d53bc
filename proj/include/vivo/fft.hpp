#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "vivo/error.hpp"

namespace vivo {

using Complex = std::complex<double>;

/// Forward DFT of one length, mixed-radix Cooley-Tukey over the prime
/// factorisation of n (radix 4 first, then 2, 3, 5, ... ; prime lengths
/// degrade to the O(n^2) direct sum). Sign convention exp(-2*pi*i*k*n/N),
/// unnormalized.
class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n)
    {
        if (n == 0)
            throw Error("fft length must be positive");
        twiddles_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double phase = -2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
            twiddles_[i] = {std::cos(phase), std::sin(phase)};
        }
        std::size_t rest = n;
        while (rest % 4 == 0) { factors_.push_back(4); rest /= 4; }
        while (rest % 2 == 0) { factors_.push_back(2); rest /= 2; }
        for (std::size_t p = 3; p * p <= rest; p += 2) {
            while (rest % p == 0) { factors_.push_back(p); rest /= p; }
        }
        if (rest > 1)
            factors_.push_back(rest);
        std::size_t max_radix = 1;
        for (std::size_t p : factors_)
            max_radix = std::max(max_radix, p);
        scratch_.resize(max_radix);
    }

    std::size_t size() const noexcept { return n_; }

    /// out[k] = sum_j in[j * stride] * exp(-2 pi i j k / n)
    void forward(const Complex* in, std::size_t stride, Complex* out)
    {
        if (n_ == 1) {
            out[0] = in[0];
            return;
        }
        transform(in, stride, out, n_, 0);
    }

    std::vector<Complex> forward(std::span<const Complex> in)
    {
        if (in.size() != n_)
            throw Error("fft length mismatch");
        std::vector<Complex> out(n_);
        forward(in.data(), 1, out.data());
        return out;
    }

private:
    /// Plain complex product; std::complex's operator* also handles inf/nan
    /// corner cases through a library call.
    static Complex mul(const Complex& a, const Complex& b) noexcept
    {
        return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
    }

    void transform(const Complex* in, std::size_t stride, Complex* out, std::size_t n, std::size_t stage)
    {
        const std::size_t p = factors_[stage];
        const std::size_t m = n / p;

        if (m == 1) {
            for (std::size_t q = 0; q < p; ++q)
                out[q] = in[q * stride];
        } else {
            for (std::size_t q = 0; q < p; ++q)
                transform(in + q * stride, stride * p, out + q * m, m, stage + 1);
        }

        // out[q*m + k] now holds bin k of the length-m DFT of subsequence q.
        const std::size_t step = n_ / n;
        Complex* t = scratch_.data();
        for (std::size_t k = 0; k < m; ++k) {
            t[0] = out[k];
            for (std::size_t q = 1; q < p; ++q)
                t[q] = mul(out[q * m + k], twiddles_[q * k * step]);
            if (p == 2) {
                out[k] = t[0] + t[1];
                out[m + k] = t[0] - t[1];
            } else if (p == 4) {
                const Complex a = t[0] + t[2], b = t[0] - t[2], c = t[1] + t[3];
                const Complex e = t[1] - t[3];
                const Complex d{e.imag(), -e.real()};  // e * -i
                out[k] = a + c;
                out[m + k] = b + d;
                out[2 * m + k] = a - c;
                out[3 * m + k] = b - d;
            } else {
                const std::size_t root_step = n_ / p;
                for (std::size_t r = 0; r < p; ++r) {
                    Complex acc = t[0];
                    for (std::size_t q = 1; q < p; ++q)
                        acc += mul(t[q], twiddles_[((q * r) % p) * root_step]);
                    out[r * m + k] = acc;
                }
            }
        }
    }

    std::size_t n_;
    std::vector<Complex> twiddles_;
    std::vector<std::size_t> factors_;
    std::vector<Complex> scratch_;
};

/// Unnormalized 2D forward DFT of a real row-major plane.
inline std::vector<Complex> dft2(std::span<const double> data, int width, int height)
{
    const std::size_t w = static_cast<std::size_t>(width);
    const std::size_t h = static_cast<std::size_t>(height);
    if (data.size() != w * h)
        throw Error("fft length mismatch");

    // Two real rows ride in one complex transform: z = a + i b, then
    // A[k] = (Z[k] + conj Z[-k]) / 2 and B[k] = (Z[k] - conj Z[-k]) / 2i.
    std::vector<Complex> rows(w * h);
    {
        FftPlan plan(w);
        std::vector<Complex> line(w), z(w);
        std::size_t y = 0;
        for (; y + 1 < h; y += 2) {
            for (std::size_t x = 0; x < w; ++x)
                line[x] = {data[y * w + x], data[(y + 1) * w + x]};
            plan.forward(line.data(), 1, z.data());
            Complex* a = rows.data() + y * w;
            Complex* b = a + w;
            for (std::size_t k = 0; k < w; ++k) {
                const Complex zk = z[k];
                const Complex zc = std::conj(z[(w - k) % w]);
                a[k] = 0.5 * (zk + zc);
                const Complex diff = zk - zc;
                b[k] = {0.5 * diff.imag(), -0.5 * diff.real()};
            }
        }
        if (y < h) {
            for (std::size_t x = 0; x < w; ++x)
                line[x] = data[y * w + x];
            plan.forward(line.data(), 1, rows.data() + y * w);
        }
    }
    std::vector<Complex> out(w * h);
    {
        FftPlan plan(h);
        std::vector<Complex> column(h);
        for (std::size_t x = 0; x < w; ++x) {
            plan.forward(rows.data() + x, w, column.data());
            for (std::size_t y = 0; y < h; ++y)
                out[y * w + x] = column[y];
        }
    }
    return out;
}

} // namespace vivo
