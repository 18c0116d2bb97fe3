#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "proxns/core.hpp"
#include "proxns/operators.hpp"
#include "proxns/prox.hpp"

namespace proxns {

/// Step parameters for the primal-dual likelihood-ball projection.
/// delta1/delta2 default (value 0) to 1/||Phi|| from the operator norm bound;
/// the product must satisfy delta1 * delta2 * ||Phi||^2 <= 1.
struct PrimalDualConfig {
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 1.0;
    int max_iters = 200;
    double tol = 1e-5;
    bool force_primal_dual = false; // skip the closed-form fast path
};

inline void validate_primal_dual(const PrimalDualConfig& pd, double op_norm) {
    if (pd.max_iters < 1) throw std::invalid_argument("PrimalDualConfig: max_iters must be >= 1");
    if (pd.delta3 < 0.0 || pd.delta3 > 1.0)
        throw std::invalid_argument("PrimalDualConfig: delta3 must be in [0, 1]");
    const double d1 = pd.delta1 > 0.0 ? pd.delta1 : 1.0 / op_norm;
    const double d2 = pd.delta2 > 0.0 ? pd.delta2 : 1.0 / op_norm;
    if (d1 * d2 * op_norm * op_norm > 1.0 + 1e-9)
        throw std::invalid_argument("PrimalDualConfig: delta1*delta2*||Phi||^2 must be <= 1");
}

/// Gaussian data term ||y - Phi x||^2 / (2 sigma^2). Unlike generic
/// potentials the full evaluation includes the normalising constant, with the
/// degrees of freedom counted on the real components of the data, so that
/// evidence values are comparable across models.
class GaussianLikelihood final : public Potential {
  public:
    GaussianLikelihood(ComplexVector y, std::shared_ptr<const MeasurementOperator> op, double sigma)
        : y_(std::move(y)), op_(std::move(op)), sigma_(sigma) {
        if (!op_) throw std::invalid_argument("GaussianLikelihood: null operator");
        if (!(sigma_ > 0.0)) throw std::invalid_argument("GaussianLikelihood: sigma must be positive");
        if (y_.size() != op_->output_dim())
            throw std::invalid_argument("GaussianLikelihood: data length mismatch");
    }

    /// Unnormalised quadratic g~(x) = ||y - Phi x||^2 / (2 sigma^2).
    double quadratic(const ImageVector& x) const {
        return squared_distance(op_->forward(x), y_) / (2.0 * sigma_ * sigma_);
    }

    /// Real degrees of freedom times log(sigma sqrt(2 pi)).
    double log_norm_constant() const {
        return static_cast<double>(op_->output_real_dof()) *
               std::log(sigma_ * std::sqrt(2.0 * std::numbers::pi));
    }

    double eval(const ImageVector& x) const override { return quadratic(x) + log_norm_constant(); }

    double log_likelihood(const ImageVector& x) const { return -eval(x); }

    bool has_score() const override { return true; }
    ImageVector score(const ImageVector& x) const override {
        ComplexVector r = op_->forward(x);
        for (std::size_t i = 0; i < r.size(); ++i) {
            r.re[i] -= y_.re[i];
            r.im[i] -= y_.im[i];
        }
        ImageVector g = op_->adjoint(r);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] /= sigma_ * sigma_;
        return g;
    }

    const ComplexVector& data() const { return y_; }
    const MeasurementOperator& op() const { return *op_; }
    std::shared_ptr<const MeasurementOperator> op_ptr() const { return op_; }
    double sigma() const { return sigma_; }

  private:
    ComplexVector y_;
    std::shared_ptr<const MeasurementOperator> op_;
    double sigma_;
};

/// Relative feasibility violation of x_out against the ball
/// ||y - Phi x||^2 <= 2 tau sigma^2: max(0, ||y - Phi x_out||^2 - 2 tau s^2) / (2 tau s^2).
inline double prox_residual(const ImageVector& /*x_in*/, const ImageVector& x_out, double tau,
                            const GaussianLikelihood& like) {
    const double r2 = 2.0 * tau * like.sigma() * like.sigma();
    const double v = squared_distance(like.op().forward(x_out), like.data());
    return std::max(0.0, v - r2) / r2;
}

/// Projection of x_current onto {x : ||y - Phi x||^2 <= 2 tau sigma^2}, the
/// prox of the likelihood-ball characteristic function.
///
/// Feasible inputs are returned unchanged. When Phi has orthonormal rows the
/// projection is closed-form: x + Phi^dagger(proj_ball(Phi x) - Phi x).
/// Otherwise a primal-dual saddle-point iteration is run, warm-started at the
/// current sample position (primal x_current, dual Phi x_current); with unit
/// steps it reduces to
///   z   <- u - proj_ball(u),  u = z + Phi x_bar
///   x   <- (x' + x - Phi^dagger z) / 2
///   xbar <- x + delta3 (x - x_prev)
/// and general steps enter through the standard prox scalings.
inline ProjectionResult constraint_project(const ImageVector& x_current, double tau,
                                           const GaussianLikelihood& like,
                                           const PrimalDualConfig& pd = {}) {
    const MeasurementOperator& op = like.op();
    const double sigma = like.sigma();
    const double radius2 = 2.0 * tau * sigma * sigma;

    // Interior points return unchanged. The 1e-12 slack admits boundary
    // points: the projection of the open set lands on its closure.
    if (like.quadratic(x_current) <= tau + 1e-12) return ProjectionResult{x_current, true, 0, 0.0};
    if (!(radius2 > 0.0))
        throw std::invalid_argument("constraint_project: tau must be positive");
    const double radius = std::sqrt(radius2);

    if (op.rows_orthonormal() && !pd.force_primal_dual) {
        const ComplexVector v = op.forward(x_current);
        const ComplexVector p = l2_ball_project(v, like.data(), radius);
        ComplexVector d(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            d.re[i] = p.re[i] - v.re[i];
            d.im[i] = p.im[i] - v.im[i];
        }
        ImageVector out = x_current;
        axpy(1.0, op.adjoint(d), out);
        const double residual = prox_residual(x_current, out, tau, like);
        return ProjectionResult{std::move(out), true, 1, residual};
    }

    const double op_norm = std::max(power_iteration_norm(op), 1e-12);
    validate_primal_dual(pd, op_norm);
    const double d1 = pd.delta1 > 0.0 ? pd.delta1 : 1.0 / op_norm;
    const double d2 = pd.delta2 > 0.0 ? pd.delta2 : 1.0 / op_norm;

    ImageVector x = x_current;
    ImageVector x_bar = x_current;
    ComplexVector z = op.forward(x_current);
    const std::size_t m = z.size();

    bool converged = false;
    int iters = 0;
    for (; iters < pd.max_iters; ++iters) {
        // Dual ascent on the ball constraint: z <- u - d1 * proj_ball(u / d1).
        ComplexVector u = op.forward(x_bar);
        for (std::size_t i = 0; i < m; ++i) {
            u.re[i] = z.re[i] + d1 * u.re[i];
            u.im[i] = z.im[i] + d1 * u.im[i];
        }
        ComplexVector us(m);
        for (std::size_t i = 0; i < m; ++i) {
            us.re[i] = u.re[i] / d1;
            us.im[i] = u.im[i] / d1;
        }
        const ComplexVector proj = l2_ball_project(us, like.data(), radius);
        for (std::size_t i = 0; i < m; ++i) {
            z.re[i] = u.re[i] - d1 * proj.re[i];
            z.im[i] = u.im[i] - d1 * proj.im[i];
        }

        // Primal prox of ||x - x'||^2 / 2 after the dual gradient step.
        const ImageVector grad = op.adjoint(z);
        ImageVector x_next(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i)
            x_next[i] = (x[i] - d2 * grad[i] + d2 * x_current[i]) / (1.0 + d2);

        // Extrapolation.
        for (std::size_t i = 0; i < x.size(); ++i)
            x_bar[i] = x_next[i] + pd.delta3 * (x_next[i] - x[i]);

        const double change = std::sqrt(squared_distance(x_next, x));
        x = std::move(x_next);
        if (change <= pd.tol * std::max(norm(x), 1e-12)) {
            converged = true;
            ++iters;
            break;
        }
    }

    const double residual = prox_residual(x_current, x, tau, like);
    return ProjectionResult{std::move(x), converged, iters, residual};
}

/// Constraint set {x : g~(x) < tau} for a Gaussian likelihood, with the
/// projection wired to constraint_project. tau is a threshold on the
/// unnormalised quadratic.
inline LikelihoodConstraint make_constraint(std::shared_ptr<const GaussianLikelihood> like,
                                            double tau, const PrimalDualConfig& pd = {}) {
    if (!like) throw std::invalid_argument("make_constraint: null likelihood");

    // Membership tests run against the unnormalised quadratic.
    class QuadraticView final : public Potential {
      public:
        explicit QuadraticView(std::shared_ptr<const GaussianLikelihood> like)
            : like_(std::move(like)) {}
        double eval(const ImageVector& x) const override { return like_->quadratic(x); }

      private:
        std::shared_ptr<const GaussianLikelihood> like_;
    };

    auto view = std::make_shared<QuadraticView>(like);
    auto projector = [like, tau, pd](const ImageVector& x) {
        return constraint_project(x, tau, *like, pd);
    };
    return LikelihoodConstraint(std::move(view), tau, std::move(projector));
}

} // namespace proxns
