#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <numbers>

#include "proxns/likelihood.hpp"
#include "proxns/operators.hpp"
#include "proxns/rng.hpp"
#include "support/test_oracles.hpp"

using namespace proxns;
using testsupport::DenseOperator;
using testsupport::kkt_ball_projection;
using testsupport::random_dense_operator;

namespace {

GaussianLikelihood identity_likelihood(std::size_t rows, std::size_t cols, double sigma) {
    auto op = std::make_shared<IdentityOperator>(rows, cols);
    return GaussianLikelihood(ComplexVector(rows * cols), op, sigma);
}

} // namespace

TEST_CASE("GaussianLikelihood evaluates the normalised quadratic", "[likelihood]") {
    auto op = std::make_shared<IdentityOperator>(1, 2);
    ComplexVector y(2);
    y.re = {1.0, -2.0};
    const GaussianLikelihood like(y, op, 0.5);

    const ImageVector x({0.0, 0.0}, 1, 2);
    const double quad = (1.0 + 4.0) / (2.0 * 0.25);
    CHECK(like.quadratic(x) == Catch::Approx(quad).margin(1e-12));
    const double log_const = 2.0 * std::log(0.5 * std::sqrt(2.0 * std::numbers::pi));
    CHECK(like.eval(x) == Catch::Approx(quad + log_const).margin(1e-12));
    CHECK(like.log_likelihood(x) == Catch::Approx(-quad - log_const).margin(1e-12));
}

TEST_CASE("GaussianLikelihood score matches finite differences", "[likelihood]") {
    Rng rng(3);
    auto op = std::make_shared<MaskedFourierOperator>(4, 4, make_mask(16, 0.5, 7));
    ComplexVector y(op->output_dim());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y.re[i] = rng.normal();
        y.im[i] = rng.normal();
    }
    const GaussianLikelihood like(y, op, 0.7);
    ImageVector x(4, 4);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
    const ImageVector g = like.score(x);
    const double h = 1e-6;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ImageVector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fd = (like.eval(xp) - like.eval(xm)) / (2.0 * h);
        CHECK(g[i] == Catch::Approx(fd).epsilon(1e-6).margin(1e-8));
    }
}

TEST_CASE("constraint_project returns feasible points unchanged", "[likelihood]") {
    const GaussianLikelihood like = identity_likelihood(1, 2, 1.0);
    const ImageVector x({0.1, 0.2}, 1, 2);
    REQUIRE(like.quadratic(x) < 1.0);
    const ProjectionResult r = constraint_project(x, 1.0, like);
    CHECK(r.converged);
    CHECK(r.iterations == 0);
    CHECK(r.x[0] == x[0]);
    CHECK(r.x[1] == x[1]);
}

TEST_CASE("constraint_project reduces to the data-space ball for identity", "[likelihood]") {
    // sigma = 1, tau = 0.5 -> radius sqrt(2 tau sigma^2) = 1.
    const GaussianLikelihood like = identity_likelihood(1, 2, 1.0);
    const ImageVector x({2.0, 0.0}, 1, 2);
    const ProjectionResult r = constraint_project(x, 0.5, like);
    CHECK(r.x[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(r.x[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("primal-dual projection matches the KKT bisection oracle", "[likelihood]") {
    Rng rng(11);
    for (int rep = 0; rep < 4; ++rep) {
        const bool orthonormal = rep % 2 == 0;
        auto op = std::make_shared<DenseOperator>(
            random_dense_operator(8, 4, 4, rng, orthonormal));
        ComplexVector y(8);
        for (std::size_t i = 0; i < 8; ++i) y.re[i] = rng.normal();
        const double sigma = 0.8;
        const GaussianLikelihood like(y, op, sigma);

        ImageVector x0(4, 4);
        for (std::size_t i = 0; i < 16; ++i) x0[i] = 2.0 * rng.normal();
        const double tau = 0.05 + 0.1 * rng.uniform();

        PrimalDualConfig pd;
        pd.force_primal_dual = true;
        pd.max_iters = 20000;
        pd.tol = 1e-10;
        const ProjectionResult r = constraint_project(x0, tau, like, pd);
        REQUIRE(r.converged);

        const ImageVector ref = kkt_ball_projection(*op, y.re, x0, 2.0 * tau * sigma * sigma);
        for (std::size_t i = 0; i < 16; ++i)
            CHECK(r.x[i] == Catch::Approx(ref[i]).margin(1e-5));
    }
}

TEST_CASE("prox_residual measures relative feasibility violation", "[likelihood]") {
    auto op = std::make_shared<IdentityOperator>(1, 2);
    ComplexVector y(2); // zero data
    const double sigma = 1.0;
    const GaussianLikelihood like(y, op, sigma);
    const double tau = 0.5; // radius^2 = 2 tau sigma^2 = 1

    const ImageVector feasible({0.5, 0.0}, 1, 2);
    CHECK(prox_residual(feasible, feasible, tau, like) == 0.0);

    const ImageVector boundary({1.0, 0.0}, 1, 2);
    CHECK(prox_residual(boundary, boundary, tau, like) <= 1e-12);

    // ||y - x||^2 = 2 = 4 tau sigma^2 -> violation (4 - 2) tau s^2 / (2 tau s^2) = 1.
    const ImageVector outside({std::sqrt(2.0), 0.0}, 1, 2);
    CHECK(prox_residual(outside, outside, tau, like) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("projection is no farther than any feasible probe", "[likelihood]") {
    Rng rng(13);
    auto op = std::make_shared<MaskedFourierOperator>(4, 4, make_mask(16, 0.5, 5));
    ImageVector deep(4, 4);
    for (std::size_t i = 0; i < 16; ++i) deep[i] = rng.normal();
    ComplexVector y = op->forward(deep);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y.re[i] += 0.05 * rng.normal();
        y.im[i] += 0.05 * rng.normal();
    }
    const double sigma = 1.0, tau = 2.0;
    const GaussianLikelihood like(y, op, sigma);
    REQUIRE(like.quadratic(deep) < tau); // interior anchor for feasible probes

    ImageVector x0(4, 4);
    for (std::size_t i = 0; i < 16; ++i) x0[i] = 3.0 * rng.normal();
    PrimalDualConfig pd;
    pd.max_iters = 5000;
    pd.tol = 1e-9;
    const ProjectionResult proj = constraint_project(x0, tau, like, pd);
    REQUIRE(proj.converged);
    const double d_proj = std::sqrt(squared_distance(proj.x, x0));

    // Feasible probes: project a random point, then pull it slightly toward
    // the interior anchor (convexity keeps it strictly feasible).
    for (int k = 0; k < 50; ++k) {
        ImageVector w(4, 4);
        for (std::size_t i = 0; i < 16; ++i) w[i] = 2.0 * rng.normal();
        ImageVector probe = constraint_project(w, tau, like, pd).x;
        for (std::size_t i = 0; i < 16; ++i) probe[i] += 2e-3 * (deep[i] - probe[i]);
        REQUIRE(like.quadratic(probe) < tau);
        CHECK(d_proj <= std::sqrt(squared_distance(probe, x0)) + 1e-5 * (1.0 + norm(x0)));
    }
}

TEST_CASE("projection is idempotent", "[likelihood]") {
    Rng rng(17);
    auto op = std::make_shared<MaskedFourierOperator>(4, 4, make_mask(16, 0.5, 5));
    ComplexVector y(op->output_dim());
    for (std::size_t i = 0; i < y.size(); ++i) y.re[i] = rng.normal();
    const GaussianLikelihood like(y, op, 1.0);
    ImageVector x0(4, 4);
    for (std::size_t i = 0; i < 16; ++i) x0[i] = 3.0 * rng.normal();

    PrimalDualConfig pd;
    pd.max_iters = 5000;
    pd.tol = 1e-8;
    const ProjectionResult once = constraint_project(x0, 1.5, like, pd);
    REQUIRE(once.converged);
    const ProjectionResult twice = constraint_project(once.x, 1.5, like, pd);
    CHECK(std::sqrt(squared_distance(twice.x, once.x)) <= 1e-5 * (1.0 + norm(once.x)));
}

TEST_CASE("primal-dual path agrees with the closed form when Phi = I", "[likelihood]") {
    Rng rng(19);
    const GaussianLikelihood like = identity_likelihood(2, 4, 1.3);
    ImageVector x0(2, 4);
    for (std::size_t i = 0; i < 8; ++i) x0[i] = 4.0 * rng.normal();
    const double tau = 0.8;

    const ProjectionResult fast = constraint_project(x0, tau, like);
    PrimalDualConfig pd;
    pd.force_primal_dual = true;
    pd.max_iters = 5000;
    pd.tol = 1e-12;
    const ProjectionResult slow = constraint_project(x0, tau, like, pd);
    REQUIRE(slow.converged);
    CHECK(std::sqrt(squared_distance(fast.x, slow.x)) < 1e-8);
}

TEST_CASE("primal-dual config is validated", "[likelihood]") {
    PrimalDualConfig pd;
    pd.max_iters = 0;
    CHECK_THROWS_AS(validate_primal_dual(pd, 1.0), std::invalid_argument);

    pd = PrimalDualConfig{};
    pd.delta3 = 1.5;
    CHECK_THROWS_AS(validate_primal_dual(pd, 1.0), std::invalid_argument);

    pd = PrimalDualConfig{};
    pd.delta1 = 2.0;
    pd.delta2 = 2.0;
    CHECK_THROWS_AS(validate_primal_dual(pd, 1.0), std::invalid_argument);
    CHECK_NOTHROW(validate_primal_dual(PrimalDualConfig{}, 1.0));
}

TEST_CASE("non-convergence is flagged, not thrown", "[likelihood]") {
    Rng rng(23);
    auto op = std::make_shared<DenseOperator>(random_dense_operator(8, 4, 4, rng, false));
    ComplexVector y(8);
    for (std::size_t i = 0; i < 8; ++i) y.re[i] = rng.normal();
    const GaussianLikelihood like(y, op, 1.0);
    ImageVector x0(4, 4);
    for (std::size_t i = 0; i < 16; ++i) x0[i] = 5.0 * rng.normal();

    PrimalDualConfig pd;
    pd.force_primal_dual = true;
    pd.max_iters = 2; // far too few
    pd.tol = 1e-14;
    const ProjectionResult r = constraint_project(x0, 0.05, like, pd);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 2);
    CHECK(std::isfinite(r.residual));
}
