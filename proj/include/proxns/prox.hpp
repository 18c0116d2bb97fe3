#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "proxns/core.hpp"
#include "proxns/rng.hpp"
#include "proxns/wavelets.hpp"

namespace proxns {

/// Elementwise sign(u) * max(|u| - threshold, 0).
inline std::vector<double> soft_threshold(const std::vector<double>& u, double threshold) {
    if (threshold < 0.0) throw std::invalid_argument("soft_threshold: threshold must be non-negative");
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = std::abs(u[i]) - threshold;
        out[i] = a > 0.0 ? (u[i] > 0.0 ? a : -a) : 0.0;
    }
    return out;
}

/// Projection of z onto the complex l2 ball {v : ||v - center|| <= radius}.
inline ComplexVector l2_ball_project(const ComplexVector& z, const ComplexVector& center,
                                     double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("l2_ball_project: radius must be positive");
    if (z.size() != center.size()) throw std::invalid_argument("l2_ball_project: length mismatch");
    const double d = std::sqrt(squared_distance(z, center));
    if (d <= radius) return z;
    const double scale = radius / d;
    ComplexVector out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        out.re[i] = center.re[i] + scale * (z.re[i] - center.re[i]);
        out.im[i] = center.im[i] + scale * (z.im[i] - center.im[i]);
    }
    return out;
}

/// Prox of mu * ||Psi^dagger x||_1 at parameter lambda for an orthogonal
/// dictionary: x + Psi(soft_{lambda*mu}(Psi^dagger x) - Psi^dagger x).
/// Dict needs analysis (Psi^dagger) and synthesis (Psi); orthogonality is the
/// dictionary's construction-time contract.
template <typename Dict = WaveletDictionary>
ImageVector l1_wavelet_prox(const ImageVector& x, double mu, double lambda_my, const Dict& dict) {
    if (mu < 0.0) throw std::invalid_argument("l1_wavelet_prox: mu must be non-negative");
    if (!(lambda_my > 0.0)) throw std::invalid_argument("l1_wavelet_prox: lambda must be positive");
    const std::vector<double> coeffs = dict.analysis(x);
    std::vector<double> shrunk = soft_threshold(coeffs, lambda_my * mu);
    for (std::size_t i = 0; i < shrunk.size(); ++i) shrunk[i] -= coeffs[i];
    ImageVector out = x;
    const ImageVector delta = dict.synthesis(shrunk);
    axpy(1.0, delta, out);
    return out;
}

/// Smooth envelope of a proxable potential: value via the infimal convolution
/// at the prox point, gradient via (x - prox(x)) / lambda.
class MoreauEnvelope {
  public:
    MoreauEnvelope(std::shared_ptr<const Potential> base, double lambda_my)
        : base_(std::move(base)), lambda_(lambda_my) {
        if (!base_) throw std::invalid_argument("MoreauEnvelope: null base");
        if (!base_->has_prox()) throw std::invalid_argument("MoreauEnvelope: base has no prox");
        if (!(lambda_ > 0.0)) throw std::invalid_argument("MoreauEnvelope: lambda must be positive");
    }

    double value(const ImageVector& x) const {
        const ImageVector p = base_->prox(x, lambda_);
        return base_->eval(p) + squared_distance(p, x) / (2.0 * lambda_);
    }

    ImageVector gradient(const ImageVector& x) const {
        const ImageVector p = base_->prox(x, lambda_);
        ImageVector g = x;
        axpy(-1.0, p, g);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] /= lambda_;
        return g;
    }

    double lambda_my() const { return lambda_; }
    const Potential& base() const { return *base_; }

  private:
    std::shared_ptr<const Potential> base_;
    double lambda_;
};

inline double moreau_eval(const MoreauEnvelope& env, const ImageVector& x) { return env.value(x); }
inline ImageVector moreau_grad(const MoreauEnvelope& env, const ImageVector& x) {
    return env.gradient(x);
}

struct BruteForceProxResult {
    ImageVector x;
    bool converged = false;
    double residual = 0.0;
};

/// Derivative-free reference minimiser of base(u) + ||u - x||^2 / (2 lambda).
///
/// Test-scale oracle, not a production path. Builds a cutting-plane model of
/// the base potential from finite-difference subgradients at jittered anchor
/// points and minimises it together with the exact quadratic term; the master
/// problem is solved in its simplex dual by pairwise Frank-Wolfe. For
/// piecewise-linear bases the cuts become exact piece gradients, so the
/// iteration terminates at the true prox. Exact line minimisations along
/// descent, coordinate and random directions polish the result, and
/// optimality is certified through one-sided directional derivatives at the
/// final point (all must be >= -1e-5).
inline BruteForceProxResult brute_force_prox(const Potential& base, const ImageVector& x,
                                             double lambda_my, long iters = 100000) {
    if (x.size() > 64) throw std::invalid_argument("brute_force_prox: dimension > 64");
    if (!(lambda_my > 0.0)) throw std::invalid_argument("brute_force_prox: lambda must be positive");
    const std::size_t n = x.size();

    long evals_left = std::max<long>(iters, 1000);
    const auto base_eval = [&](const ImageVector& v) {
        --evals_left;
        return base.eval(v);
    };
    const auto objective = [&](const ImageVector& v) {
        return base_eval(v) + squared_distance(v, x) / (2.0 * lambda_my);
    };

    const double scale = 1.0 + norm(x);
    Rng dirs(0x70726f78ULL); // fixed stream: the oracle is deterministic

    ImageVector u = x;
    double fu = objective(u);

    // Subgradient of base at q from central differences. Outer one-sided
    // slopes on both sides flag coordinates whose probe interval straddles a
    // kink; anchors are re-jittered until every coordinate is clean.
    const double h_fd = 1e-7 * scale;
    const auto fd_base_grad = [&](const ImageVector& q, std::vector<double>& g) {
        bool clean = true;
        ImageVector probe = q;
        for (std::size_t i = 0; i < n; ++i) {
            const double keep = probe[i];
            probe[i] = keep + h_fd;
            const double fp = base_eval(probe);
            probe[i] = keep + 0.5 * h_fd;
            const double fph = base_eval(probe);
            probe[i] = keep - 0.5 * h_fd;
            const double fmh = base_eval(probe);
            probe[i] = keep - h_fd;
            const double fm = base_eval(probe);
            probe[i] = keep;
            const double slope_r = (fp - fph) / (0.5 * h_fd);
            const double slope_l = (fmh - fm) / (0.5 * h_fd);
            if (std::abs(slope_r - slope_l) > 1e-5 * (1.0 + std::abs(slope_r) + std::abs(slope_l)))
                clean = false;
            g[i] = (fp - fm) / (2.0 * h_fd);
        }
        return clean;
    };

    // Bundle state. beta_j = f_j + s_j . (x - q_j), so the dual of the master
    //   min_u max_j [f_j + s_j.(u - q_j)] + ||u - x||^2 / (2 lambda)
    // is  max_{w in simplex} sum w_j beta_j - (lambda/2) ||sum w_j s_j||^2,
    // with primal recovery u(w) = x - lambda * sum w_j s_j.
    std::vector<std::vector<double>> slopes;
    std::vector<double> beta;
    std::vector<std::vector<double>> gram; // gram[j][k] = s_j . s_k
    std::vector<double> w;                 // simplex weights
    std::vector<double> corr;              // corr[j] = s_j . Sw
    std::vector<double> sw(n, 0.0);        // sum w_j s_j

    const auto add_cut = [&](const ImageVector& q, double f_q, const std::vector<double>& s) {
        double b = f_q;
        for (std::size_t i = 0; i < n; ++i) b += s[i] * (x[i] - q[i]);
        slopes.push_back(s);
        beta.push_back(b);
        const std::size_t k = slopes.size();
        gram.emplace_back(k, 0.0);
        for (std::size_t j = 0; j < k; ++j) {
            double dp = 0.0;
            for (std::size_t i = 0; i < n; ++i) dp += slopes[j][i] * s[i];
            gram[k - 1][j] = dp;
            if (j + 1 < k) gram[j].push_back(dp);
        }
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) c += s[i] * sw[i];
        corr.push_back(c);
        w.push_back(0.0);
    };

    // Pairwise Frank-Wolfe on the dual: move weight from the worst active
    // atom to the best atom with an exact line search.
    const auto solve_master = [&](int max_steps) {
        const std::size_t k = w.size();
        for (int step = 0; step < max_steps; ++step) {
            std::size_t best = 0, worst = k;
            double g_best = -std::numeric_limits<double>::infinity();
            double g_worst = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
                const double gj = beta[j] - lambda_my * corr[j];
                if (gj > g_best) {
                    g_best = gj;
                    best = j;
                }
                if (w[j] > 0.0 && gj < g_worst) {
                    g_worst = gj;
                    worst = j;
                }
            }
            if (worst == k || best == worst) break;
            const double improve = g_best - g_worst;
            if (improve <= 1e-15 * (1.0 + std::abs(g_best))) break;
            const double d2 = gram[best][best] - 2.0 * gram[best][worst] + gram[worst][worst];
            double gamma = d2 > 0.0 ? improve / (lambda_my * d2) : w[worst];
            gamma = std::min(gamma, w[worst]);
            if (gamma <= 0.0) break;
            w[best] += gamma;
            w[worst] -= gamma;
            for (std::size_t i = 0; i < n; ++i)
                sw[i] += gamma * (slopes[best][i] - slopes[worst][i]);
            for (std::size_t j = 0; j < k; ++j)
                corr[j] += gamma * (gram[j][best] - gram[j][worst]);
        }
        double value = 0.0;
        for (std::size_t j = 0; j < k; ++j) value += w[j] * beta[j];
        double sw2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) sw2 += sw[i] * sw[i];
        return value - 0.5 * lambda_my * sw2;
    };

    // Anchor with straddle-free finite differences; returns the cut inputs.
    const auto make_anchor = [&](const ImageVector& at, ImageVector& q, std::vector<double>& s) {
        for (int attempt = 0; attempt < 8; ++attempt) {
            q = at;
            if (attempt > 0)
                for (std::size_t i = 0; i < n; ++i)
                    q[i] += (dirs.uniform() - 0.5) * 2e-6 * scale * attempt;
            if (fd_base_grad(q, s)) return;
        }
    };

    {
        ImageVector q(x.rows(), x.cols());
        std::vector<double> s(n);
        make_anchor(x, q, s);
        add_cut(q, base_eval(q), s);
        w[0] = 1.0;
        corr[0] = gram[0][0];
        sw = slopes[0];
    }

    const double gap_tol = 1e-12 * std::max(1.0, std::abs(fu));
    double last_gap = std::numeric_limits<double>::infinity();
    int stall = 0;
    const long eval_reserve = static_cast<long>(12 * n + 200);
    while (static_cast<long>(slopes.size()) < 400 && evals_left > eval_reserve) {
        const double dual_value = solve_master(600);
        ImageVector u_master = x;
        for (std::size_t i = 0; i < n; ++i) u_master[i] -= lambda_my * sw[i];
        const double f_master = objective(u_master);
        if (f_master < fu) {
            fu = f_master;
            u = u_master;
        }
        const double gap = fu - dual_value;
        if (gap <= gap_tol) break;
        stall = gap > 0.999 * last_gap ? stall + 1 : 0;
        if (stall > 40) break;
        last_gap = std::min(last_gap, gap);

        ImageVector q(x.rows(), x.cols());
        std::vector<double> s(n);
        make_anchor(u_master, q, s);
        add_cut(q, base_eval(q), s);
        const double f_anchor = objective(q);
        if (f_anchor < fu) {
            fu = f_anchor;
            u = q;
        }
    }
    solve_master(4000);
    {
        ImageVector u_master = x;
        for (std::size_t i = 0; i < n; ++i) u_master[i] -= lambda_my * sw[i];
        const double f_master = objective(u_master);
        if (f_master < fu) {
            fu = f_master;
            u = u_master;
        }
    }

    // Phase 2: exact line minimisation (golden section on a bracketed convex
    // slice) along FD-descent, coordinate and pseudo-random directions.
    const auto line_minimise = [&](const std::vector<double>& dir) {
        double dn2 = 0.0;
        for (double d : dir) dn2 += d * d;
        if (dn2 <= 0.0) return;
        const double dn = std::sqrt(dn2);
        const auto f_at = [&](double t) {
            ImageVector v = u;
            for (std::size_t i = 0; i < n; ++i) v[i] += (t / dn) * dir[i];
            return objective(v);
        };
        // Bracket the 1-D minimum around t = 0.
        double span = 0.25 * lambda_my * scale;
        double lo = -span, hi = span;
        for (int e = 0; e < 60 && f_at(lo) < fu; ++e) lo *= 2.0;
        for (int e = 0; e < 60 && f_at(hi) < fu; ++e) hi *= 2.0;
        const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = lo, b = hi;
        double c1 = b - invphi * (b - a), c2 = a + invphi * (b - a);
        double f1 = f_at(c1), f2 = f_at(c2);
        for (int it = 0; it < 90 && (b - a) > 1e-13 * scale; ++it) {
            if (f1 < f2) {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = b - invphi * (b - a);
                f1 = f_at(c1);
            } else {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = a + invphi * (b - a);
                f2 = f_at(c2);
            }
        }
        const double tbest = 0.5 * (a + b);
        const double fbest = f_at(tbest);
        if (fbest < fu) {
            for (std::size_t i = 0; i < n; ++i) u[i] += (tbest / dn) * dir[i];
            fu = fbest;
        }
    };

    const auto objective_fd_grad = [&]() {
        std::vector<double> g(n);
        fd_base_grad(u, g);
        for (std::size_t i = 0; i < n; ++i) g[i] += (u[i] - x[i]) / lambda_my;
        return g;
    };
    for (int round = 0; round < 4; ++round) {
        line_minimise(objective_fd_grad());
        std::vector<double> e(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            e.assign(n, 0.0);
            e[i] = 1.0;
            line_minimise(e);
        }
        for (std::size_t r = 0; r < n; ++r) {
            std::vector<double> d(n);
            for (auto& v : d) v = dirs.normal();
            line_minimise(d);
        }
    }

    // Certificate: one-sided directional derivatives at u along +-coordinates
    // and random directions must all be non-negative up to tolerance.
    const double hc = 1e-7 * scale;
    double worst = 0.0;
    const auto check_dir = [&](const std::vector<double>& dir) {
        double dn = 0.0;
        for (double d : dir) dn += d * d;
        dn = std::sqrt(dn);
        if (dn <= 0.0) return;
        ImageVector v = u;
        for (std::size_t i = 0; i < n; ++i) v[i] += (hc / dn) * dir[i];
        const double slope = (objective(v) - fu) / hc;
        worst = std::max(worst, -slope);
    };
    std::vector<double> e(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        e.assign(n, 0.0);
        e[i] = 1.0;
        check_dir(e);
        e[i] = -1.0;
        check_dir(e);
    }
    for (int r = 0; r < 16; ++r) {
        std::vector<double> d(n);
        for (auto& v : d) v = dirs.normal();
        check_dir(d);
    }

    BruteForceProxResult result;
    result.x = std::move(u);
    result.residual = worst / scale;
    result.converged = result.residual <= 1e-5;
    return result;
}

} // namespace proxns
