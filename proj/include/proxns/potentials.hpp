#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>

#include "proxns/core.hpp"
#include "proxns/prox.hpp"
#include "proxns/wavelets.hpp"

namespace proxns {

/// The zero potential; its prox is the identity.
class ZeroPotential final : public Potential {
  public:
    double eval(const ImageVector&) const override { return 0.0; }
    bool has_score() const override { return true; }
    ImageVector score(const ImageVector& x) const override { return ImageVector(x.rows(), x.cols()); }
    bool has_prox() const override { return true; }
    ImageVector prox(const ImageVector& x, double) const override { return x; }
};

/// Isotropic Gaussian negative log-density ||x - m||^2 / (2 s^2), constant
/// dropped. Smooth and proxable, so it exercises both kernel families.
class GaussianPrior final : public Potential {
  public:
    GaussianPrior(ImageVector mean, double variance) : mean_(std::move(mean)), var_(variance) {
        if (!(var_ > 0.0)) throw std::invalid_argument("GaussianPrior: variance must be positive");
    }

    GaussianPrior(std::size_t rows, std::size_t cols, double variance)
        : GaussianPrior(ImageVector(rows, cols), variance) {}

    double eval(const ImageVector& x) const override {
        return squared_distance(x, mean_) / (2.0 * var_);
    }

    bool has_score() const override { return true; }
    ImageVector score(const ImageVector& x) const override {
        ImageVector g = x;
        axpy(-1.0, mean_, g);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] /= var_;
        return g;
    }

    bool has_prox() const override { return true; }
    ImageVector prox(const ImageVector& x, double lambda_my) const override {
        // argmin ||u-m||^2/(2 s^2) + ||u-x||^2/(2 lambda) = (s^2 x + lambda m)/(s^2 + lambda)
        const double denom = var_ + lambda_my;
        ImageVector p(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i)
            p[i] = (var_ * x[i] + lambda_my * mean_[i]) / denom;
        return p;
    }

    bool has_direct_sample() const override { return true; }
    ImageVector direct_sample(Rng& rng) const override {
        ImageVector x = mean_;
        const double s = std::sqrt(var_);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * rng.normal();
        return x;
    }

    const ImageVector& mean() const { return mean_; }
    double variance() const { return var_; }

  private:
    ImageVector mean_;
    double var_;
};

/// Separable mu * ||x||_1; prox is elementwise soft thresholding.
class L1Potential final : public Potential {
  public:
    explicit L1Potential(double mu) : mu_(mu) {
        if (mu_ < 0.0) throw std::invalid_argument("L1Potential: mu must be non-negative");
    }

    double eval(const ImageVector& x) const override {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i]);
        return mu_ * s;
    }

    bool has_prox() const override { return true; }
    ImageVector prox(const ImageVector& x, double lambda_my) const override {
        return ImageVector(soft_threshold(x.values(), lambda_my * mu_), x.rows(), x.cols());
    }

    double mu() const { return mu_; }

  private:
    double mu_;
};

/// Sparsity-promoting prior mu * ||Psi^dagger x||_1 over an orthogonal
/// wavelet dictionary. Not differentiable; sampled through its prox.
class WaveletL1Prior final : public Potential {
  public:
    WaveletL1Prior(std::shared_ptr<const WaveletDictionary> dict, double mu)
        : dict_(std::move(dict)), mu_(mu) {
        if (!dict_) throw std::invalid_argument("WaveletL1Prior: null dictionary");
        if (mu_ < 0.0) throw std::invalid_argument("WaveletL1Prior: mu must be non-negative");
    }

    double eval(const ImageVector& x) const override {
        double s = 0.0;
        for (double c : dict_->analysis(x)) s += std::abs(c);
        return mu_ * s;
    }

    bool has_prox() const override { return true; }
    ImageVector prox(const ImageVector& x, double lambda_my) const override {
        return l1_wavelet_prox(x, mu_, lambda_my, *dict_);
    }

    // Orthogonal dictionary: the coefficients are iid Laplace(1/mu), so the
    // normalised prior admits an exact draw (improper when mu = 0).
    bool has_direct_sample() const override { return mu_ > 0.0; }
    ImageVector direct_sample(Rng& rng) const override {
        if (!(mu_ > 0.0)) throw std::logic_error("WaveletL1Prior: improper prior (mu = 0)");
        std::vector<double> coeffs(dict_->rows() * dict_->cols());
        for (auto& c : coeffs) {
            const double u = rng.uniform() - 0.5; // inverse-CDF Laplace draw
            c = -(1.0 / mu_) * (u < 0.0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(u));
        }
        return dict_->synthesis(coeffs);
    }

    double mu() const { return mu_; }
    const WaveletDictionary& dictionary() const { return *dict_; }

  private:
    std::shared_ptr<const WaveletDictionary> dict_;
    double mu_;
};

} // namespace proxns
