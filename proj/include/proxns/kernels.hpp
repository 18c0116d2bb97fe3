#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxns/core.hpp"
#include "proxns/denoiser.hpp"
#include "proxns/rng.hpp"

namespace proxns {

enum class KernelVariant { LangevinSmoothPrior, LangevinMyPrior, DataDriven };

/// Declarative description of one constrained Langevin kernel.
///
/// The three variants share the constraint-envelope drift
/// -(delta / 2 lambda) [x - proj(x)] and differ in the prior term:
///   smooth prior:  +(delta/2) grad log pi(x)
///   proxable prior: -(delta / 2 lambda_p) [x - prox_prior(x)]
///   data-driven:   -(alpha delta / 2 eps) [x - D_eps(x)]
/// An absent constraint drops the projection term (prior-only sampling).
struct KernelSpec {
    KernelVariant variant = KernelVariant::LangevinSmoothPrior;
    std::shared_ptr<const Potential> prior;
    std::optional<LikelihoodConstraint> constraint;
    std::shared_ptr<const Denoiser> denoiser;
    RunConfig cfg;
    bool mh_correction = false;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::optional<double> lambda_prior;      // defaults to cfg.lambda_my
    std::optional<double> lambda_constraint; // defaults to cfg.lambda_my

    double prior_lambda() const { return lambda_prior.value_or(cfg.lambda_my); }
    double constraint_lambda() const { return lambda_constraint.value_or(cfg.lambda_my); }
};

/// Checks variant requirements; returns non-fatal warnings (step-size safety).
inline std::vector<std::string> validate_kernel_spec(const KernelSpec& spec) {
    validate_config(spec.cfg);
    if (spec.rows == 0 || spec.cols == 0)
        throw std::invalid_argument("KernelSpec: state shape must be set");
    switch (spec.variant) {
        case KernelVariant::LangevinSmoothPrior:
            if (!spec.prior || !spec.prior->has_score())
                throw std::invalid_argument("KernelSpec: smooth-prior kernel needs a prior with score");
            break;
        case KernelVariant::LangevinMyPrior:
            if (!spec.prior || !spec.prior->has_prox())
                throw std::invalid_argument("KernelSpec: prox-prior kernel needs a prior with prox");
            break;
        case KernelVariant::DataDriven:
            if (!spec.denoiser)
                throw std::invalid_argument("KernelSpec: data-driven kernel needs a denoiser");
            if (spec.mh_correction)
                throw std::invalid_argument(
                    "KernelSpec: mh_correction unavailable for the data-driven kernel "
                    "(prior density not evaluatable)");
            if (std::abs(spec.cfg.epsilon - spec.denoiser->epsilon()) >
                1e-9 * std::max(1.0, std::abs(spec.denoiser->epsilon())))
                throw std::invalid_argument("KernelSpec: cfg.epsilon does not match denoiser epsilon");
            break;
    }
    if (spec.mh_correction && !spec.prior)
        throw std::invalid_argument("KernelSpec: mh_correction needs an evaluatable prior");
    std::vector<std::string> warnings;
    const double d = spec.cfg.delta;
    if (spec.constraint && d / (2.0 * spec.constraint_lambda()) > 1.0)
        warnings.push_back("delta/(2*lambda_my) > 1 on the constraint term; projections may overshoot");
    if (spec.variant == KernelVariant::LangevinMyPrior && d / (2.0 * spec.prior_lambda()) > 1.0)
        warnings.push_back("delta/(2*lambda_my) > 1 on the prior term; prox steps may overshoot");
    return warnings;
}

struct DriftResult {
    ImageVector drift;
    bool proj_converged = true;
    double proj_residual = 0.0;
};

/// Full deterministic drift of the active kernel at x (everything except the
/// sqrt(delta) noise). Also the proposal mean offset for the MH correction.
inline DriftResult kernel_drift(const ImageVector& x, const KernelSpec& spec) {
    const double delta = spec.cfg.delta;
    DriftResult out{ImageVector(x.rows(), x.cols()), true, 0.0};

    switch (spec.variant) {
        case KernelVariant::LangevinSmoothPrior: {
            // +(delta/2) grad log pi = -(delta/2) * score of the potential
            const ImageVector g = spec.prior->score(x);
            axpy(-0.5 * delta, g, out.drift);
            break;
        }
        case KernelVariant::LangevinMyPrior: {
            const double lp = spec.prior_lambda();
            const ImageVector p = spec.prior->prox(x, lp);
            const double c = -0.5 * delta / lp;
            for (std::size_t i = 0; i < x.size(); ++i) out.drift[i] += c * (x[i] - p[i]);
            break;
        }
        case KernelVariant::DataDriven: {
            const double eps = spec.denoiser->epsilon();
            const ImageVector d = spec.denoiser->apply(x);
            const double c = -0.5 * spec.cfg.alpha * delta / eps;
            for (std::size_t i = 0; i < x.size(); ++i) out.drift[i] += c * (x[i] - d[i]);
            break;
        }
    }

    if (spec.constraint) {
        const ProjectionResult proj = spec.constraint->project_full(x);
        const double c = -0.5 * delta / spec.constraint_lambda();
        for (std::size_t i = 0; i < x.size(); ++i) out.drift[i] += c * (x[i] - proj.x[i]);
        out.proj_converged = proj.converged;
        out.proj_residual = proj.residual;
    }
    return out;
}

struct StepResult {
    ImageVector x;
    bool proj_converged = true;
    double proj_residual = 0.0;
};

/// One Euler-Maruyama update with an externally supplied noise vector
/// (test hook; w has the dimension of x and is scaled by sqrt(delta)).
inline StepResult step_with_noise(const ImageVector& x, const KernelSpec& spec,
                                  const std::vector<double>& w) {
    if (w.size() != x.size()) throw std::invalid_argument("step_with_noise: noise length mismatch");
    DriftResult d = kernel_drift(x, spec);
    StepResult out{std::move(d.drift), d.proj_converged, d.proj_residual};
    const double s = std::sqrt(spec.cfg.delta);
    for (std::size_t i = 0; i < x.size(); ++i) out.x[i] += x[i] + s * w[i];
    return out;
}

/// One kernel update; draws exactly x.size() standard normals from rng.
inline StepResult kernel_step(const ImageVector& x, const KernelSpec& spec, Rng& rng) {
    return step_with_noise(x, spec, rng.normal_vec(x.size()));
}

inline StepResult step_smooth_prior(const ImageVector& x, const KernelSpec& spec, Rng& rng) {
    if (spec.variant != KernelVariant::LangevinSmoothPrior)
        throw std::invalid_argument("step_smooth_prior: wrong kernel variant");
    return kernel_step(x, spec, rng);
}

inline StepResult step_my_prior(const ImageVector& x, const KernelSpec& spec, Rng& rng) {
    if (spec.variant != KernelVariant::LangevinMyPrior)
        throw std::invalid_argument("step_my_prior: wrong kernel variant");
    return kernel_step(x, spec, rng);
}

inline StepResult step_data_driven(const ImageVector& x, const KernelSpec& spec, Rng& rng) {
    if (spec.variant != KernelVariant::DataDriven)
        throw std::invalid_argument("step_data_driven: wrong kernel variant");
    return kernel_step(x, spec, rng);
}

/// Strict threshold with the documented 1e-12 slack used by feasibility
/// checks (the projection lands on the closed boundary of an open set).
inline bool feasible_with_slack(const LikelihoodConstraint& c, const ImageVector& x) {
    return c.potential().eval(x) <= c.tau() + 1e-12;
}

struct MhResult {
    bool accepted = false;
    ImageVector x;
};

/// Metropolis-Hastings correction targeting the (constrained) prior exactly.
/// The proposal density is the Gaussian implied by the active kernel's drift
/// with covariance delta I; proposals outside the hard constraint are
/// rejected outright. Draws exactly one uniform from rng.
inline MhResult mh_accept(const ImageVector& x_old, const ImageVector& x_proposed,
                          const KernelSpec& spec, Rng& rng) {
    if (!spec.mh_correction) throw std::invalid_argument("mh_accept: mh_correction disabled");
    if (spec.variant == KernelVariant::DataDriven)
        throw std::invalid_argument("mh_accept: unavailable for the data-driven kernel");

    const double u = rng.uniform();

    if (spec.constraint && !feasible_with_slack(*spec.constraint, x_proposed))
        return MhResult{false, x_old};

    const double delta = spec.cfg.delta;
    const ImageVector fwd_mean_offset = kernel_drift(x_old, spec).drift;
    const ImageVector rev_mean_offset = kernel_drift(x_proposed, spec).drift;

    double fwd = 0.0, rev = 0.0; // squared proposal distances
    for (std::size_t i = 0; i < x_old.size(); ++i) {
        const double df = x_proposed[i] - x_old[i] - fwd_mean_offset[i];
        const double dr = x_old[i] - x_proposed[i] - rev_mean_offset[i];
        fwd += df * df;
        rev += dr * dr;
    }
    const double log_ratio = (-spec.prior->eval(x_proposed) - rev / (2.0 * delta)) -
                             (-spec.prior->eval(x_old) - fwd / (2.0 * delta));
    if (std::log(u) < log_ratio) return MhResult{true, x_proposed};
    return MhResult{false, x_old};
}

/// Per-chain counters surfaced in diagnostics.
struct ChainStats {
    long long steps = 0;
    long long mh_proposals = 0;
    long long mh_accepted = 0;
    long long proj_nonconverged = 0;
    double max_proj_residual = 0.0;
};

using TraceFn = std::function<void(long step, const ImageVector& x, bool accepted)>;

/// Runs n_steps kernel updates (with MH correction when enabled) in place.
inline void evolve(ImageVector& x, const KernelSpec& spec, long n_steps, Rng& rng, ChainStats& stats,
                   const TraceFn& trace = {}) {
    for (long k = 0; k < n_steps; ++k) {
        StepResult s = kernel_step(x, spec, rng);
        if (!s.proj_converged) ++stats.proj_nonconverged;
        stats.max_proj_residual = std::max(stats.max_proj_residual, s.proj_residual);
        bool accepted = true;
        if (spec.mh_correction) {
            MhResult r = mh_accept(x, s.x, spec, rng);
            ++stats.mh_proposals;
            if (r.accepted) ++stats.mh_accepted;
            accepted = r.accepted;
            x = std::move(r.x);
        } else {
            x = std::move(s.x);
        }
        ++stats.steps;
        if (trace) trace(k, x, accepted);
    }
}

/// Samples from the prior by running the active kernel with the constraint
/// term removed: burn_in steps, then one state every `thinning` steps. When
/// the prior admits an exact draw the chain starts from one (drawn first),
/// otherwise from zero.
inline std::vector<ImageVector> sample_prior(const KernelSpec& spec, long n_samples, Rng& rng,
                                             ChainStats* stats_out = nullptr) {
    KernelSpec prior_spec = spec;
    prior_spec.constraint.reset();
    validate_kernel_spec(prior_spec);

    ChainStats stats;
    ImageVector x = prior_spec.prior && prior_spec.prior->has_direct_sample()
                        ? prior_spec.prior->direct_sample(rng)
                        : ImageVector(prior_spec.rows, prior_spec.cols);
    evolve(x, prior_spec, prior_spec.cfg.burn_in, rng, stats);
    std::vector<ImageVector> samples;
    samples.reserve(static_cast<std::size_t>(std::max<long>(n_samples, 0)));
    for (long s = 0; s < n_samples; ++s) {
        evolve(x, prior_spec, prior_spec.cfg.thinning, rng, stats);
        samples.push_back(x);
    }
    if (stats_out) *stats_out = stats;
    return samples;
}

} // namespace proxns
