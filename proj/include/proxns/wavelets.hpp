#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxns/core.hpp"

namespace proxns {

enum class WaveletFamily { Haar, Daubechies6 };

inline WaveletFamily wavelet_family_from_string(const std::string& s) {
    if (s == "haar") return WaveletFamily::Haar;
    if (s == "daubechies6" || s == "db6") return WaveletFamily::Daubechies6;
    throw std::invalid_argument("unknown wavelet family: " + s);
}

namespace detail {

/// Orthonormal scaling filters. The Daubechies-6 taps are evaluated from
/// their closed form so orthogonality holds to full double precision.
inline std::vector<double> scaling_filter(WaveletFamily family) {
    switch (family) {
        case WaveletFamily::Haar: {
            const double s = 1.0 / std::sqrt(2.0);
            return {s, s};
        }
        case WaveletFamily::Daubechies6: {
            const double r10 = std::sqrt(10.0);
            const double b = std::sqrt(5.0 + 2.0 * r10);
            const double d = 16.0 * std::sqrt(2.0);
            return {(1.0 + r10 + b) / d,       (5.0 + r10 + 3.0 * b) / d,
                    (10.0 - 2.0 * r10 + 2.0 * b) / d, (10.0 - 2.0 * r10 - 2.0 * b) / d,
                    (5.0 + r10 - 3.0 * b) / d, (1.0 + r10 - b) / d};
        }
    }
    throw std::logic_error("unreachable");
}

/// Quadrature-mirror detail filter g[i] = (-1)^i h[L-1-i].
inline std::vector<double> detail_filter(const std::vector<double>& h) {
    const std::size_t L = h.size();
    std::vector<double> g(L);
    for (std::size_t i = 0; i < L; ++i) g[i] = ((i % 2 == 0) ? 1.0 : -1.0) * h[L - 1 - i];
    return g;
}

} // namespace detail

/// Square orthogonal wavelet dictionary on a 2-D grid (periodic boundary),
/// Mallat pyramid over `levels` scales. A degenerate dimension of size 1 is
/// passed through, so 1-D signals are supported as 1xN or Nx1 shapes.
class WaveletDictionary {
  public:
    WaveletDictionary(WaveletFamily family, int levels, std::size_t rows, std::size_t cols)
        : family_(family), levels_(levels), rows_(rows), cols_(cols),
          h_(detail::scaling_filter(family)), g_(detail::detail_filter(h_)) {
        if (levels_ < 1) throw std::invalid_argument("WaveletDictionary: levels must be >= 1");
        if (rows_ == 0 || cols_ == 0) throw std::invalid_argument("WaveletDictionary: empty shape");
        const std::size_t factor = std::size_t{1} << static_cast<unsigned>(levels_);
        if (rows_ > 1 && rows_ % factor != 0)
            throw std::invalid_argument("WaveletDictionary: rows not divisible by 2^levels");
        if (cols_ > 1 && cols_ % factor != 0)
            throw std::invalid_argument("WaveletDictionary: cols not divisible by 2^levels");
        if (rows_ == 1 && cols_ == 1)
            throw std::invalid_argument("WaveletDictionary: shape 1x1 has no scales");
        // Periodisation keeps the transform orthogonal only while the filter
        // never wraps onto itself: every transformed block must be at least as
        // long as the filter.
        const std::size_t deepest = std::size_t{1} << static_cast<unsigned>(levels_ - 1);
        if ((rows_ > 1 && rows_ / deepest < h_.size()) || (cols_ > 1 && cols_ / deepest < h_.size()))
            throw std::invalid_argument("WaveletDictionary: too many levels for this filter length");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    int levels() const { return levels_; }
    WaveletFamily family() const { return family_; }

    /// Analysis coefficients (the adjoint/inverse dictionary applied to x),
    /// stored in the usual pyramidal in-place layout, length rows*cols.
    std::vector<double> analysis(const ImageVector& x) const {
        if (x.rows() != rows_ || x.cols() != cols_)
            throw std::invalid_argument("WaveletDictionary: shape mismatch");
        std::vector<double> c = x.values();
        std::size_t r = rows_, ccount = cols_;
        for (int lev = 0; lev < levels_; ++lev) {
            transform_block(c, r, ccount, /*forward=*/true);
            if (r > 1) r /= 2;
            if (ccount > 1) ccount /= 2;
        }
        return c;
    }

    /// Synthesis from pyramidal coefficients back to an image.
    ImageVector synthesis(const std::vector<double>& coeffs) const {
        if (coeffs.size() != rows_ * cols_)
            throw std::invalid_argument("WaveletDictionary: coefficient length mismatch");
        std::vector<double> c = coeffs;
        std::size_t r = rows_ >> (rows_ > 1 ? levels_ : 0);
        std::size_t ccount = cols_ >> (cols_ > 1 ? levels_ : 0);
        for (int lev = 0; lev < levels_; ++lev) {
            const std::size_t r2 = (rows_ > 1) ? r * 2 : r;
            const std::size_t c2 = (cols_ > 1) ? ccount * 2 : ccount;
            transform_block(c, r2, c2, /*forward=*/false);
            r = r2;
            ccount = c2;
        }
        return ImageVector(std::move(c), rows_, cols_);
    }

  private:
    // One separable level on the top-left (active) block of the full grid.
    void transform_block(std::vector<double>& c, std::size_t r, std::size_t ccount, bool forward) const {
        std::vector<double> line;
        if (ccount > 1) {
            line.resize(ccount);
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < ccount; ++j) line[j] = c[i * cols_ + j];
                if (forward)
                    analysis_1d(line);
                else
                    synthesis_1d(line);
                for (std::size_t j = 0; j < ccount; ++j) c[i * cols_ + j] = line[j];
            }
        }
        if (r > 1) {
            line.resize(r);
            for (std::size_t j = 0; j < ccount; ++j) {
                for (std::size_t i = 0; i < r; ++i) line[i] = c[i * cols_ + j];
                if (forward)
                    analysis_1d(line);
                else
                    synthesis_1d(line);
                for (std::size_t i = 0; i < r; ++i) c[i * cols_ + j] = line[i];
            }
        }
    }

    // Periodic decimating filter bank: first half scaling, second half detail.
    void analysis_1d(std::vector<double>& s) const {
        const std::size_t n = s.size();
        const std::size_t half = n / 2;
        const std::size_t L = h_.size();
        std::vector<double> out(n, 0.0);
        for (std::size_t k = 0; k < half; ++k) {
            double a = 0.0, d = 0.0;
            for (std::size_t i = 0; i < L; ++i) {
                const double v = s[(2 * k + i) % n];
                a += h_[i] * v;
                d += g_[i] * v;
            }
            out[k] = a;
            out[half + k] = d;
        }
        s = std::move(out);
    }

    // Exact transpose of analysis_1d; orthogonality makes it the inverse.
    void synthesis_1d(std::vector<double>& s) const {
        const std::size_t n = s.size();
        const std::size_t half = n / 2;
        const std::size_t L = h_.size();
        std::vector<double> out(n, 0.0);
        for (std::size_t k = 0; k < half; ++k) {
            const double a = s[k];
            const double d = s[half + k];
            for (std::size_t i = 0; i < L; ++i) {
                out[(2 * k + i) % n] += h_[i] * a + g_[i] * d;
            }
        }
        s = std::move(out);
    }

    WaveletFamily family_;
    int levels_;
    std::size_t rows_, cols_;
    std::vector<double> h_, g_;
};

} // namespace proxns
