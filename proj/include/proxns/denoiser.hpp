#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "proxns/core.hpp"

namespace proxns {

/// Mapping x -> D_eps(x) with a declared regularisation noise level eps.
/// Through Tweedie's identity the denoiser stands in for the score of the
/// eps-smoothed prior; see tweedie_score.
class Denoiser {
  public:
    virtual ~Denoiser() = default;
    virtual ImageVector apply(const ImageVector& x) const = 0;
    virtual double epsilon() const = 0;
};

/// Identity denoiser (zero score); mainly a test and endpoint fixture.
class IdentityDenoiser final : public Denoiser {
  public:
    explicit IdentityDenoiser(double epsilon) : eps_(epsilon) {}
    ImageVector apply(const ImageVector& x) const override { return x; }
    double epsilon() const override { return eps_; }

  private:
    double eps_;
};

/// Exact posterior-mean denoiser for a Gaussian prior N(m, s^2 I) under
/// N(x, eps I) observation noise: D(x) = x - eps (x - m) / (s^2 + eps).
/// Its Tweedie score is exactly the score of the smoothed prior
/// N(m, (s^2 + eps) I), which makes it the reference for equivalence checks.
class AnalyticGaussianDenoiser final : public Denoiser {
  public:
    AnalyticGaussianDenoiser(ImageVector mean, double variance, double epsilon)
        : mean_(std::move(mean)), var_(variance), eps_(epsilon) {
        if (!(var_ > 0.0)) throw std::invalid_argument("AnalyticGaussianDenoiser: variance must be positive");
        if (!(eps_ > 0.0)) throw std::invalid_argument("AnalyticGaussianDenoiser: epsilon must be positive");
    }

    ImageVector apply(const ImageVector& x) const override {
        ImageVector out = x;
        const double c = eps_ / (var_ + eps_);
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - c * (x[i] - mean_[i]);
        return out;
    }

    double epsilon() const override { return eps_; }
    double variance() const { return var_; }
    const ImageVector& mean() const { return mean_; }

  private:
    ImageVector mean_;
    double var_;
    double eps_;
};

/// Separable periodic Gaussian blur with a normalised kernel: linear,
/// translation invariant, fixes constant images, operator norm <= 1.
/// Desk-scale stand-in for a trained denoising network.
class GaussianSmoothingDenoiser final : public Denoiser {
  public:
    GaussianSmoothingDenoiser(double width_pixels, double epsilon)
        : width_(width_pixels), eps_(epsilon) {
        if (!(width_ > 0.0)) throw std::invalid_argument("GaussianSmoothingDenoiser: width must be positive");
        if (!(eps_ > 0.0)) throw std::invalid_argument("GaussianSmoothingDenoiser: epsilon must be positive");
        const int half = std::max(1, static_cast<int>(std::ceil(3.0 * width_)));
        kernel_.resize(2 * half + 1);
        double sum = 0.0;
        for (int i = -half; i <= half; ++i) {
            const double v = std::exp(-0.5 * (i / width_) * (i / width_));
            kernel_[static_cast<std::size_t>(i + half)] = v;
            sum += v;
        }
        for (auto& v : kernel_) v /= sum;
    }

    ImageVector apply(const ImageVector& x) const override {
        const auto rows = static_cast<long>(x.rows());
        const auto cols = static_cast<long>(x.cols());
        const long half = static_cast<long>(kernel_.size() / 2);
        const auto wrap = [](long i, long n) { return static_cast<std::size_t>(((i % n) + n) % n); };
        ImageVector tmp(x.rows(), x.cols()), out(x.rows(), x.cols());
        for (long r = 0; r < rows; ++r) {
            for (long c = 0; c < cols; ++c) {
                double acc = 0.0;
                for (long k = -half; k <= half; ++k)
                    acc += kernel_[static_cast<std::size_t>(k + half)] *
                           x.at(static_cast<std::size_t>(r), wrap(c + k, cols));
                tmp.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
            }
        }
        for (long r = 0; r < rows; ++r) {
            for (long c = 0; c < cols; ++c) {
                double acc = 0.0;
                for (long k = -half; k <= half; ++k)
                    acc += kernel_[static_cast<std::size_t>(k + half)] *
                           tmp.at(wrap(r + k, rows), static_cast<std::size_t>(c));
                out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
            }
        }
        return out;
    }

    double epsilon() const override { return eps_; }
    double width() const { return width_; }

  private:
    double width_;
    double eps_;
    std::vector<double> kernel_;
};

/// Score of the eps-smoothed prior via the denoiser: (D(x) - x) / eps.
inline ImageVector tweedie_score(const Denoiser& d, const ImageVector& x) {
    if (!(d.epsilon() > 0.0)) throw std::invalid_argument("tweedie_score: epsilon must be positive");
    ImageVector s = d.apply(x);
    axpy(-1.0, x, s);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] /= d.epsilon();
    return s;
}

} // namespace proxns
