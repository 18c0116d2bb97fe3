#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "proxns/core.hpp"

namespace proxns {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

/// In-place radix-2 Cooley-Tukey transform, unnormalised. `sign` is -1 for
/// the forward kernel exp(-2*pi*i*jk/n) and +1 for the inverse kernel.
inline void fft_radix2(std::vector<std::complex<double>>& a, int sign) {
    const std::size_t n = a.size();
    if (n <= 1) return;

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

/// 2-D transform over a row-major grid, unnormalised.
inline void fft2_inplace(std::vector<std::complex<double>>& grid, std::size_t rows, std::size_t cols,
                         int sign) {
    std::vector<std::complex<double>> line;
    line.reserve(std::max(rows, cols));
    for (std::size_t r = 0; r < rows; ++r) {
        line.assign(grid.begin() + static_cast<std::ptrdiff_t>(r * cols),
                    grid.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
        fft_radix2(line, sign);
        std::copy(line.begin(), line.end(), grid.begin() + static_cast<std::ptrdiff_t>(r * cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
        line.resize(rows);
        for (std::size_t r = 0; r < rows; ++r) line[r] = grid[r * cols + c];
        fft_radix2(line, sign);
        for (std::size_t r = 0; r < rows; ++r) grid[r * cols + c] = line[r];
    }
}

inline void require_pow2_shape(std::size_t rows, std::size_t cols) {
    if (!is_power_of_two(rows) || !is_power_of_two(cols))
        throw std::invalid_argument("fft2: rows and cols must be powers of two");
}

} // namespace detail

/// Unitary 2-D DFT of a real image; Parseval holds exactly up to rounding.
inline ComplexVector fft2_forward(const ImageVector& x) {
    detail::require_pow2_shape(x.rows(), x.cols());
    const std::size_t n = x.size();
    std::vector<std::complex<double>> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = {x[i], 0.0};
    detail::fft2_inplace(grid, x.rows(), x.cols(), -1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    ComplexVector out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.re[i] = grid[i].real() * scale;
        out.im[i] = grid[i].imag() * scale;
    }
    return out;
}

/// Real part of the unitary inverse 2-D DFT. This is the adjoint of
/// fft2_forward on real images.
inline ImageVector fft2_inverse_real(const ComplexVector& coeffs, std::size_t rows, std::size_t cols) {
    detail::require_pow2_shape(rows, cols);
    const std::size_t n = rows * cols;
    if (coeffs.size() != n) throw std::invalid_argument("fft2: coefficient length mismatch");
    std::vector<std::complex<double>> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = {coeffs.re[i], coeffs.im[i]};
    detail::fft2_inplace(grid, rows, cols, +1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    ImageVector out(rows, cols);
    for (std::size_t i = 0; i < n; ++i) out[i] = grid[i].real() * scale;
    return out;
}

} // namespace proxns
