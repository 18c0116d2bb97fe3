#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace proxns {

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Flat row-major real image with 2-D shape metadata. The shape only matters
/// to operators and wavelets; every sampler treats the data as a vector.
class ImageVector {
  public:
    ImageVector() = default;

    ImageVector(std::size_t rows, std::size_t cols)
        : data_(rows * cols, 0.0), rows_(rows), cols_(cols) {}

    ImageVector(std::vector<double> data, std::size_t rows, std::size_t cols)
        : data_(std::move(data)), rows_(rows), cols_(cols) {
        if (data_.size() != rows_ * cols_)
            throw std::invalid_argument("ImageVector: data length " + std::to_string(data_.size()) +
                                        " does not match shape " + std::to_string(rows_) + "x" +
                                        std::to_string(cols_));
        if (!all_finite(data_))
            throw std::invalid_argument("ImageVector: non-finite entry");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

  private:
    std::vector<double> data_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

inline double dot(const ImageVector& a, const ImageVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(const ImageVector& a) { return dot(a, a); }
inline double norm(const ImageVector& a) { return std::sqrt(squared_norm(a)); }

inline double squared_distance(const ImageVector& a, const ImageVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

/// y += alpha * x
inline void axpy(double alpha, const ImageVector& x, ImageVector& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// Complex data vector stored as separate real/imaginary parts of equal length.
struct ComplexVector {
    std::vector<double> re;
    std::vector<double> im;

    ComplexVector() = default;

    explicit ComplexVector(std::size_t m) : re(m, 0.0), im(m, 0.0) {}

    ComplexVector(std::vector<double> re_in, std::vector<double> im_in)
        : re(std::move(re_in)), im(std::move(im_in)) {
        if (re.size() != im.size())
            throw std::invalid_argument("ComplexVector: component length mismatch");
        if (!all_finite(re) || !all_finite(im))
            throw std::invalid_argument("ComplexVector: non-finite entry");
    }

    std::size_t size() const { return re.size(); }
};

inline double squared_norm(const ComplexVector& z) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += z.re[i] * z.re[i] + z.im[i] * z.im[i];
    return s;
}

inline double norm(const ComplexVector& z) { return std::sqrt(squared_norm(z)); }

inline double squared_distance(const ComplexVector& a, const ComplexVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double dr = a.re[i] - b.re[i];
        const double di = a.im[i] - b.im[i];
        s += dr * dr + di * di;
    }
    return s;
}

class Rng;

/// An evaluatable negative-log density, known up to an additive constant
/// unless stated otherwise by the concrete type. `score` is the gradient of
/// the potential value (so minus the gradient of the log density); `prox` is
/// the proximity operator with per-call parameter lambda. Priors with a
/// tractable normalised density may also expose an exact draw, used to start
/// the prior-sampling chain at equilibrium.
class Potential {
  public:
    virtual ~Potential() = default;

    virtual double eval(const ImageVector& x) const = 0;

    virtual bool has_score() const { return false; }
    virtual ImageVector score(const ImageVector&) const {
        throw std::logic_error("Potential: score not available");
    }

    virtual bool has_prox() const { return false; }
    virtual ImageVector prox(const ImageVector&, double /*lambda*/) const {
        throw std::logic_error("Potential: prox not available");
    }

    virtual bool has_direct_sample() const { return false; }
    virtual ImageVector direct_sample(Rng&) const {
        throw std::logic_error("Potential: direct sampling not available");
    }
};

/// Outcome of an iterative projection. `converged` is false when the
/// iteration hit its cap before meeting tolerance; the final iterate and its
/// feasibility residual are still returned.
struct ProjectionResult {
    ImageVector x;
    bool converged = true;
    int iterations = 0;
    double residual = 0.0;
};

/// Convex likelihood-threshold set {x : g(x) < tau} with membership test and
/// projection. The projector is supplied by whoever can compute it for the
/// concrete g (closed form or iterative); membership is always the strict
/// comparison against g itself.
class LikelihoodConstraint {
  public:
    using Projector = std::function<ProjectionResult(const ImageVector&)>;

    LikelihoodConstraint(std::shared_ptr<const Potential> potential_g, double tau, Projector projector)
        : g_(std::move(potential_g)), tau_(tau), projector_(std::move(projector)) {
        if (!g_) throw std::invalid_argument("LikelihoodConstraint: null potential");
        if (!projector_) throw std::invalid_argument("LikelihoodConstraint: null projector");
    }

    bool contains(const ImageVector& x) const { return g_->eval(x) < tau_; }

    /// Interior points are returned unchanged; exterior points go through the
    /// projector.
    ImageVector project(const ImageVector& x) const { return project_full(x).x; }

    ProjectionResult project_full(const ImageVector& x) const {
        if (contains(x)) return ProjectionResult{x, true, 0, 0.0};
        return projector_(x);
    }

    double tau() const { return tau_; }
    const Potential& potential() const { return *g_; }

  private:
    std::shared_ptr<const Potential> g_;
    double tau_;
    Projector projector_;
};

/// Run-level parameters. Defaults follow the reference radio-interferometry
/// configuration; most experiments override delta/lambda_my for their scale.
struct RunConfig {
    double delta = 1e-7;      // Langevin step size
    double lambda_my = 5e-7;  // Moreau-Yosida regularisation parameter
    double mu = 5e4;          // sparsity scale of the wavelet-l1 prior
    double sigma = 1.0;       // noise standard deviation of the likelihood
    double epsilon = 8.34;    // denoiser regularisation noise level
    double alpha = 3.5e-7;    // data-driven prior balance
    long n_live = 100;
    long n_dead = 2500;
    long thinning = 20;
    long burn_in = 100;
    std::uint64_t rng_seed = 0;
};

/// Checks the RunConfig invariants, reporting the first violated field.
inline void validate_config(const RunConfig& cfg) {
    if (!(cfg.delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (!(cfg.lambda_my > 0.0)) throw std::invalid_argument("lambda_my must be positive");
    if (!(cfg.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (cfg.n_live < 2) throw std::invalid_argument("n_live must be >= 2");
    if (cfg.thinning < 1) throw std::invalid_argument("thinning must be >= 1");
}

} // namespace proxns
