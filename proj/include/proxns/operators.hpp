#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "proxns/core.hpp"
#include "proxns/fft.hpp"
#include "proxns/rng.hpp"

namespace proxns {

/// Linear measurement model Phi mapping a real image to complex data. The
/// adjoint is taken with respect to the real inner product, i.e. it returns
/// the real image such that Re<Phi x, y> = <x, adjoint(y)>.
class MeasurementOperator {
  public:
    virtual ~MeasurementOperator() = default;

    virtual ComplexVector forward(const ImageVector& x) const = 0;
    virtual ImageVector adjoint(const ComplexVector& y) const = 0;

    virtual std::size_t input_rows() const = 0;
    virtual std::size_t input_cols() const = 0;
    std::size_t input_dim() const { return input_rows() * input_cols(); }

    /// Complex length of the data vector.
    virtual std::size_t output_dim() const = 0;

    virtual double operator_norm_bound() const = 0;

    /// True when Phi Phi^dagger = I, enabling the closed-form likelihood prox.
    virtual bool rows_orthonormal() const { return false; }

    /// False for operators whose output is real-valued (imaginary part is
    /// identically zero and carries no noise or degrees of freedom).
    virtual bool complex_output() const { return true; }

    /// Real degrees of freedom of the data vector.
    std::size_t output_real_dof() const {
        return complex_output() ? 2 * output_dim() : output_dim();
    }
};

/// Exactly round(kept_fraction * n) true entries chosen uniformly without
/// replacement; deterministic in the seed.
inline std::vector<std::uint8_t> make_mask(std::size_t n, double kept_fraction, std::uint64_t seed) {
    if (!(kept_fraction > 0.0) || kept_fraction > 1.0)
        throw std::invalid_argument("make_mask: kept_fraction must be in (0, 1]");
    const auto k = static_cast<std::size_t>(std::llround(kept_fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    // Partial Fisher-Yates: the first k slots become the kept indices.
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(idx[i], idx[j]);
    }
    std::vector<std::uint8_t> mask(n, 0);
    for (std::size_t i = 0; i < k; ++i) mask[idx[i]] = 1;
    return mask;
}

inline std::size_t count_kept(const std::vector<std::uint8_t>& mask) {
    std::size_t k = 0;
    for (auto b : mask) k += (b != 0);
    return k;
}

/// Identity measurement: real data equal to the image.
class IdentityOperator final : public MeasurementOperator {
  public:
    IdentityOperator(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

    ComplexVector forward(const ImageVector& x) const override {
        ComplexVector y(x.size());
        y.re = x.values();
        return y;
    }

    ImageVector adjoint(const ComplexVector& y) const override {
        return ImageVector(y.re, rows_, cols_);
    }

    std::size_t input_rows() const override { return rows_; }
    std::size_t input_cols() const override { return cols_; }
    std::size_t output_dim() const override { return rows_ * cols_; }
    double operator_norm_bound() const override { return 1.0; }
    bool rows_orthonormal() const override { return true; }
    bool complex_output() const override { return false; }

  private:
    std::size_t rows_, cols_;
};

/// Pixel-selection measurement: keeps the masked subset of image entries.
class MaskedIdentityOperator final : public MeasurementOperator {
  public:
    MaskedIdentityOperator(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> mask)
        : rows_(rows), cols_(cols), mask_(std::move(mask)), kept_(count_kept(mask_)) {
        if (mask_.size() != rows_ * cols_)
            throw std::invalid_argument("MaskedIdentityOperator: mask length mismatch");
    }

    ComplexVector forward(const ImageVector& x) const override {
        ComplexVector y(kept_);
        std::size_t j = 0;
        for (std::size_t i = 0; i < mask_.size(); ++i)
            if (mask_[i]) y.re[j++] = x[i];
        return y;
    }

    ImageVector adjoint(const ComplexVector& y) const override {
        if (y.size() != kept_) throw std::invalid_argument("MaskedIdentityOperator: data length mismatch");
        ImageVector x(rows_, cols_);
        std::size_t j = 0;
        for (std::size_t i = 0; i < mask_.size(); ++i)
            if (mask_[i]) x[i] = y.re[j++];
        return x;
    }

    std::size_t input_rows() const override { return rows_; }
    std::size_t input_cols() const override { return cols_; }
    std::size_t output_dim() const override { return kept_; }
    double operator_norm_bound() const override { return 1.0; }
    bool rows_orthonormal() const override { return true; }
    bool complex_output() const override { return false; }

    const std::vector<std::uint8_t>& mask() const { return mask_; }

  private:
    std::size_t rows_, cols_;
    std::vector<std::uint8_t> mask_;
    std::size_t kept_;
};

/// Masked unitary Fourier measurement: keeps the masked subset of the 2-D
/// spectrum, each kept coefficient carrying independent complex noise.
///
/// As a real-linear map on real images the rows are NOT orthonormal: a kept
/// conjugate pair (k, -k) contributes linearly dependent real rows, so
/// Phi Phi^dagger != I and the likelihood-ball projection must go through the
/// primal-dual solver. ||Phi|| = 1 still holds.
class MaskedFourierOperator final : public MeasurementOperator {
  public:
    MaskedFourierOperator(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> mask)
        : rows_(rows), cols_(cols), mask_(std::move(mask)), kept_(count_kept(mask_)) {
        detail::require_pow2_shape(rows_, cols_);
        if (mask_.size() != rows_ * cols_)
            throw std::invalid_argument("MaskedFourierOperator: mask length mismatch");
    }

    ComplexVector forward(const ImageVector& x) const override {
        const ComplexVector full = fft2_forward(x);
        ComplexVector y(kept_);
        std::size_t j = 0;
        for (std::size_t i = 0; i < mask_.size(); ++i) {
            if (mask_[i]) {
                y.re[j] = full.re[i];
                y.im[j] = full.im[i];
                ++j;
            }
        }
        return y;
    }

    ImageVector adjoint(const ComplexVector& y) const override {
        if (y.size() != kept_) throw std::invalid_argument("MaskedFourierOperator: data length mismatch");
        ComplexVector full(rows_ * cols_);
        std::size_t j = 0;
        for (std::size_t i = 0; i < mask_.size(); ++i) {
            if (mask_[i]) {
                full.re[i] = y.re[j];
                full.im[i] = y.im[j];
                ++j;
            }
        }
        return fft2_inverse_real(full, rows_, cols_);
    }

    std::size_t input_rows() const override { return rows_; }
    std::size_t input_cols() const override { return cols_; }
    std::size_t output_dim() const override { return kept_; }
    double operator_norm_bound() const override { return 1.0; }

    const std::vector<std::uint8_t>& mask() const { return mask_; }

  private:
    std::size_t rows_, cols_;
    std::vector<std::uint8_t> mask_;
    std::size_t kept_;
};

/// Power-iteration estimate of ||Phi|| (largest singular value), run on
/// Phi^dagger Phi with a fixed seeded start.
inline double power_iteration_norm(const MeasurementOperator& op, int iters = 20,
                                   std::uint64_t seed = 0x506f7765ULL) {
    Rng rng(seed);
    ImageVector v(op.input_rows(), op.input_cols());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal();
    double lambda = 0.0;
    for (int k = 0; k < iters; ++k) {
        const double nv = norm(v);
        if (nv == 0.0) return 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] /= nv;
        const ImageVector w = op.adjoint(op.forward(v));
        lambda = dot(v, w); // Rayleigh quotient for Phi^dagger Phi
        v = w;
    }
    return std::sqrt(std::max(lambda, 0.0));
}

/// Largest |Re<Phi x, y> - <x, Phi^dagger y>| / (||x|| ||y||) over random pairs.
inline double adjoint_mismatch(const MeasurementOperator& op, Rng& rng, int pairs = 100) {
    double worst = 0.0;
    for (int p = 0; p < pairs; ++p) {
        ImageVector x(op.input_rows(), op.input_cols());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
        ComplexVector y(op.output_dim());
        for (std::size_t i = 0; i < y.size(); ++i) {
            y.re[i] = rng.normal();
            y.im[i] = op.complex_output() ? rng.normal() : 0.0;
        }
        const ComplexVector fx = op.forward(x);
        double lhs = 0.0;
        for (std::size_t i = 0; i < fx.size(); ++i) lhs += fx.re[i] * y.re[i] + fx.im[i] * y.im[i];
        const double rhs = dot(x, op.adjoint(y));
        const double denom = norm(x) * norm(y);
        if (denom > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / denom);
    }
    return worst;
}

} // namespace proxns
