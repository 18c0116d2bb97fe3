#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "proxns/core.hpp"
#include "proxns/kernels.hpp"
#include "proxns/likelihood.hpp"
#include "proxns/rng.hpp"

namespace proxns {

inline double logsumexp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct LivePoint {
    ImageVector x;
    double log_like = 0.0; // normalised Gaussian log-likelihood
};

struct DeadPoint {
    ImageVector x;
    double log_like = 0.0;
    double log_weight = 0.0; // log prior-volume shell X_{i-1} - X_i
};

struct NsDiagnostics {
    long long kernel_steps = 0;
    long long mh_proposals = 0;
    long long mh_accepted = 0;
    long long proj_nonconverged = 0;
    long long replacement_fallbacks = 0;
    double max_proj_residual = 0.0;
};

struct NestedRunResult {
    double log_evidence = -std::numeric_limits<double>::infinity();
    double log_evidence_std = 0.0;
    double information_nats = 0.0;
    long n_live = 0;
    std::vector<DeadPoint> dead_points; // ascending log_like; tail holds the final live set
    ImageVector posterior_mean_image;
    NsDiagnostics diagnostics;
};

/// Model bundle for a nested run: the prior, the normalised likelihood, and
/// how to build the constrained kernel for a quadratic threshold tau.
struct NestedModel {
    std::shared_ptr<const Potential> prior;
    std::shared_ptr<const GaussianLikelihood> likelihood;
    KernelVariant variant = KernelVariant::LangevinSmoothPrior;
    std::shared_ptr<const Denoiser> denoiser;
    bool mh_correction = false;
    std::size_t rows = 0;
    std::size_t cols = 0;
    PrimalDualConfig pd;
    std::optional<double> lambda_prior;
    std::optional<double> lambda_constraint;
    // Shell quadrature: rectangle w_i = X_{i-1} - X_i by default, trapezoid
    // w_i = (X_{i-1} - X_{i+1}) / 2 behind this flag.
    bool trapezoid_weights = false;

    KernelSpec kernel_for(std::optional<double> tau_quad, const RunConfig& cfg) const {
        KernelSpec spec;
        spec.variant = variant;
        spec.prior = prior;
        spec.denoiser = denoiser;
        spec.cfg = cfg;
        spec.mh_correction = mh_correction;
        spec.rows = rows;
        spec.cols = cols;
        spec.lambda_prior = lambda_prior;
        spec.lambda_constraint = lambda_constraint;
        if (tau_quad) spec.constraint = make_constraint(likelihood, *tau_quad, pd);
        return spec;
    }
};

using RunLogFn = std::function<void(long iter, double tau_quad, double dead_log_like, double log_z)>;

/// Square-root error estimate sqrt(H / n_live) in nats.
inline double evidence_error(double information_nats, long n_live) {
    return std::sqrt(std::max(information_nats, 0.0) / static_cast<double>(n_live));
}

inline double evidence_error(const NestedRunResult& result) {
    return evidence_error(result.information_nats, result.n_live);
}

/// Posterior mean over the weighted dead points (weights L_i * w_i).
inline ImageVector posterior_mean(const NestedRunResult& result) {
    if (result.dead_points.empty()) throw std::invalid_argument("posterior_mean: no dead points");
    ImageVector mean(result.dead_points.front().x.rows(), result.dead_points.front().x.cols());
    for (const DeadPoint& d : result.dead_points) {
        const double p = std::exp(d.log_weight + d.log_like - result.log_evidence);
        axpy(p, d.x, mean);
    }
    return mean;
}

/// Nested sampling with deterministic prior-volume compression.
///
/// Live points are initialised from the prior (constraint removed). Each
/// iteration retires the lowest-likelihood live point as a dead point with
/// shell weight X_{i-1} - X_i, log X_i = -i/n_live, sets the threshold tau
/// from the retired likelihood, and regenerates the slot by evolving a copy
/// of a uniformly chosen surviving point through `thinning` constrained
/// kernel steps. After n_dead iterations the mean live likelihood times the
/// remaining volume is added and the live set is appended to the dead list.
///
/// Draw order per iteration: one uniform index for the survivor choice, then
/// the kernel's own draws. Equal seeds give bitwise-equal results.
inline NestedRunResult run_nested(const NestedModel& model, const RunConfig& cfg, Rng& rng,
                                  const RunLogFn& run_log = {}, const TraceFn& trace = {}) {
    validate_config(cfg);
    if (!model.likelihood) throw std::invalid_argument("run_nested: model has no likelihood");
    const long n = cfg.n_live;
    const double log_norm = model.likelihood->log_norm_constant();

    NestedRunResult result;
    result.n_live = n;

    // Population from the prior.
    const KernelSpec prior_spec = model.kernel_for(std::nullopt, cfg);
    ChainStats init_stats;
    std::vector<ImageVector> initial = sample_prior(prior_spec, n, rng, &init_stats);
    std::vector<LivePoint> live;
    live.reserve(static_cast<std::size_t>(n));
    for (auto& x : initial) {
        const double ll = model.likelihood->log_likelihood(x);
        if (!std::isfinite(ll)) throw std::runtime_error("run_nested: non-finite log-likelihood");
        live.push_back(LivePoint{std::move(x), ll});
    }

    NsDiagnostics diag;
    diag.kernel_steps += init_stats.steps;
    diag.mh_proposals += init_stats.mh_proposals;
    diag.mh_accepted += init_stats.mh_accepted;
    diag.proj_nonconverged += init_stats.proj_nonconverged;
    diag.max_proj_residual = std::max(diag.max_proj_residual, init_stats.max_proj_residual);

    const double inv_n = 1.0 / static_cast<double>(n);
    const double log_shell = std::log(-std::expm1(-inv_n)); // log(1 - e^{-1/n})
    // Trapezoid shells span two compression steps: (1 - e^{-2/n}) / 2.
    const double log_shell_trap = std::log(-std::expm1(-2.0 * inv_n) / 2.0);
    double log_z = -std::numeric_limits<double>::infinity();
    double last_dead_log_like = -std::numeric_limits<double>::infinity();

    for (long iter = 1; iter <= cfg.n_dead; ++iter) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < live.size(); ++i)
            if (live[i].log_like < live[worst].log_like) worst = i;

        const double dead_ll = live[worst].log_like;
        if (dead_ll < last_dead_log_like)
            throw std::logic_error("run_nested: dead log-likelihoods must be non-decreasing");
        last_dead_log_like = dead_ll;

        // log w_i = log(X_{i-1} - X_i) with X_i = e^{-i/n}; the trapezoid
        // variant uses (X_{i-1} - X_{i+1})/2, halving the final shell.
        const double shell = model.trapezoid_weights
                                 ? (iter == cfg.n_dead ? log_shell - std::numbers::ln2 : log_shell_trap)
                                 : log_shell;
        const double log_weight = -static_cast<double>(iter - 1) * inv_n + shell;
        log_z = logsumexp(log_z, log_weight + dead_ll);
        result.dead_points.push_back(DeadPoint{live[worst].x, dead_ll, log_weight});

        // Likelihood threshold from the retired point, as a quadratic bound.
        const double tau_quad = -dead_ll - log_norm;
        const KernelSpec spec = model.kernel_for(tau_quad, cfg);

        // Seed from a uniformly chosen surviving live point.
        std::size_t seed_idx = rng.uniform_index(live.size() - 1);
        if (seed_idx >= worst) ++seed_idx;

        ImageVector candidate = live[seed_idx].x;
        ChainStats stats;
        evolve(candidate, spec, cfg.thinning, rng, stats, trace);
        diag.kernel_steps += stats.steps;
        diag.mh_proposals += stats.mh_proposals;
        diag.mh_accepted += stats.mh_accepted;
        diag.proj_nonconverged += stats.proj_nonconverged;
        diag.max_proj_residual = std::max(diag.max_proj_residual, stats.max_proj_residual);

        // Hard constraint on the replacement; an unadjusted chain that drifted
        // out falls back to its (feasible) seed.
        if (spec.constraint && !feasible_with_slack(*spec.constraint, candidate)) {
            candidate = live[seed_idx].x;
            ++diag.replacement_fallbacks;
        }

        const double ll = model.likelihood->log_likelihood(candidate);
        if (!std::isfinite(ll)) throw std::runtime_error("run_nested: non-finite log-likelihood");
        live[worst] = LivePoint{std::move(candidate), ll};

        if (run_log) run_log(iter, tau_quad, dead_ll, log_z);
    }

    // Remainder: mean live likelihood over the final volume X_{n_dead}.
    const double log_x_final = -static_cast<double>(cfg.n_dead) * inv_n;
    std::stable_sort(live.begin(), live.end(),
                     [](const LivePoint& a, const LivePoint& b) { return a.log_like < b.log_like; });
    const double live_weight = log_x_final - std::log(static_cast<double>(n));
    for (LivePoint& lp : live) {
        log_z = logsumexp(log_z, live_weight + lp.log_like);
        result.dead_points.push_back(DeadPoint{std::move(lp.x), lp.log_like, live_weight});
    }

    result.log_evidence = log_z;

    // Information H = sum p_i log L_i - log Z over the posterior weights.
    double h = 0.0;
    for (const DeadPoint& d : result.dead_points) {
        const double p = std::exp(d.log_weight + d.log_like - log_z);
        if (p > 0.0) h += p * d.log_like;
    }
    h -= log_z;
    result.information_nats = h;
    result.log_evidence_std = evidence_error(h, n);
    result.diagnostics = diag;
    result.posterior_mean_image = posterior_mean(result);
    return result;
}

} // namespace proxns
