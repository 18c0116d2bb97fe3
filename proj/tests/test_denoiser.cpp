#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <numbers>

#include "proxns/denoiser.hpp"
#include "proxns/denoiser_bridge.hpp"
#include "proxns/rng.hpp"

using namespace proxns;

TEST_CASE("tweedie score of the identity denoiser vanishes", "[denoiser]") {
    const IdentityDenoiser d(0.5);
    const ImageVector x({1.0, -2.0, 0.3}, 1, 3);
    const ImageVector s = tweedie_score(d, x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(s[i] == 0.0);
}

TEST_CASE("tweedie score of the analytic Gaussian denoiser is the smoothed score", "[denoiser]") {
    const AnalyticGaussianDenoiser d(ImageVector(1, 1), 1.0, 0.5);
    const ImageVector x({1.0}, 1, 1);
    // score of the potential of N(0, (s^2 + eps) I): -(grad log p) = x / 1.5,
    // tweedie convention returns grad log p = -x / 1.5.
    CHECK(tweedie_score(d, x)[0] == Catch::Approx(-1.0 / 1.5).margin(1e-12));
}

TEST_CASE("tweedie score matches finite differences of the smoothed log density", "[denoiser]") {
    Rng rng(3);
    ImageVector mean(1, 4);
    for (std::size_t i = 0; i < 4; ++i) mean[i] = rng.normal();
    const double s2 = 1.7, eps = 0.4;
    const AnalyticGaussianDenoiser d(mean, s2, eps);

    const auto log_density = [&](const ImageVector& x) {
        const double v = s2 + eps;
        double q = 0.0;
        for (std::size_t i = 0; i < 4; ++i) q += (x[i] - mean[i]) * (x[i] - mean[i]);
        return -q / (2.0 * v) - 2.0 * std::log(2.0 * std::numbers::pi * v);
    };

    const double h = 1e-6;
    for (int rep = 0; rep < 50; ++rep) {
        ImageVector x(1, 4);
        for (std::size_t i = 0; i < 4; ++i) x[i] = 2.0 * rng.normal();
        const ImageVector s = tweedie_score(d, x);
        for (std::size_t i = 0; i < 4; ++i) {
            ImageVector xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (log_density(xp) - log_density(xm)) / (2.0 * h);
            CHECK(s[i] == Catch::Approx(fd).epsilon(1e-6).margin(1e-9));
        }
    }
}

TEST_CASE("tweedie consistency holds to 1e-10", "[denoiser]") {
    Rng rng(9);
    ImageVector mean(2, 2);
    for (std::size_t i = 0; i < 4; ++i) mean[i] = rng.normal();
    const double s2 = 0.8, eps = 0.25;
    const AnalyticGaussianDenoiser d(mean, s2, eps);
    for (int rep = 0; rep < 20; ++rep) {
        ImageVector x(2, 2);
        for (std::size_t i = 0; i < 4; ++i) x[i] = 3.0 * rng.normal();
        const ImageVector s = tweedie_score(d, x);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(s[i] == Catch::Approx(-(x[i] - mean[i]) / (s2 + eps)).margin(1e-10));
    }
}

TEST_CASE("smoothing denoiser fixes constants and is nonexpansive", "[denoiser]") {
    const GaussianSmoothingDenoiser d(1.2, 0.1);
    ImageVector flat(6, 10);
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = 2.5;
    const ImageVector out = d.apply(flat);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == Catch::Approx(2.5).margin(1e-12));

    // Power iteration on the linear map: operator norm <= 1.
    Rng rng(21);
    ImageVector v(6, 10);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal();
    double lambda = 0.0;
    for (int it = 0; it < 40; ++it) {
        const double nv = norm(v);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] /= nv;
        // The kernel is symmetric, so the map is self-adjoint; iterate D^2.
        const ImageVector w = d.apply(d.apply(v));
        lambda = dot(v, w);
        v = w;
    }
    CHECK(std::sqrt(lambda) <= 1.0 + 1e-10);
}

TEST_CASE("external denoiser echo endpoint returns the input", "[denoiser]") {
    const ExternalDenoiser echo({"/bin/cat"}, 0.5, 5000);
    Rng rng(5);
    ImageVector x(4, 4);
    for (std::size_t i = 0; i < 16; ++i) x[i] = rng.normal();
    const ImageVector out = external_denoise(echo, x);
    for (std::size_t i = 0; i < 16; ++i) CHECK(out[i] == x[i]);

    // The connection serialises request/response pairs; repeat to be sure.
    const ImageVector out2 = echo.apply(x);
    for (std::size_t i = 0; i < 16; ++i) CHECK(out2[i] == x[i]);
}

TEST_CASE("external denoiser flags shape mismatches", "[denoiser]") {
    // Endpoint that always replies with a 2-element frame.
    const std::string script =
        "import sys,struct\n"
        "r,w=sys.stdin.buffer,sys.stdout.buffer\n"
        "while True:\n"
        "    h=r.read(16)\n"
        "    if len(h)<16: break\n"
        "    n=struct.unpack('<Q',h[8:16])[0]\n"
        "    r.read(8*n)\n"
        "    w.write(b'PNDZ'+struct.pack('<I',8+16)+struct.pack('<Q',2)+struct.pack('<2d',1.0,2.0))\n"
        "    w.flush()\n";
    const ExternalDenoiser bad({"/usr/bin/env", "python3", "-c", script}, 0.5, 5000);
    const ImageVector x(2, 2);
    CHECK_THROWS_AS(bad.apply(x), DenoiserShapeMismatch);
}

TEST_CASE("external denoiser flags non-finite outputs", "[denoiser]") {
    const std::string script =
        "import sys,struct\n"
        "r,w=sys.stdin.buffer,sys.stdout.buffer\n"
        "while True:\n"
        "    h=r.read(16)\n"
        "    if len(h)<16: break\n"
        "    n=struct.unpack('<Q',h[8:16])[0]\n"
        "    r.read(8*n)\n"
        "    w.write(b'PNDZ'+struct.pack('<I',8+8*n)+struct.pack('<Q',n)+struct.pack('<%dd'%n,*([float('nan')]*n)))\n"
        "    w.flush()\n";
    const ExternalDenoiser bad({"/usr/bin/env", "python3", "-c", script}, 0.5, 5000);
    const ImageVector x(1, 3);
    CHECK_THROWS_AS(bad.apply(x), DenoiserNonFinite);
}

TEST_CASE("external denoiser times out on a silent endpoint", "[denoiser]") {
    const ExternalDenoiser silent({"/bin/sleep", "30"}, 0.5, 200);
    const ImageVector x(1, 2);
    CHECK_THROWS_AS(silent.apply(x), DenoiserTimeout);
}

TEST_CASE("endpoint wrapping the smoothing denoiser matches in-process bitwise", "[denoiser]") {
    const double width = 1.0, eps = 0.1;
    const GaussianSmoothingDenoiser local(width, eps);
    const ExternalDenoiser remote({PNDZ_ENDPOINT_PATH, "--denoiser", "gaussian-smooth", "--width",
                                   "1.0", "--epsilon", "0.1", "--rows", "8", "--cols", "8"},
                                  eps, 10000);
    Rng rng(11);
    for (int rep = 0; rep < 3; ++rep) {
        ImageVector x(8, 8);
        for (std::size_t i = 0; i < 64; ++i) x[i] = rng.normal();
        const ImageVector a = local.apply(x);
        const ImageVector b = remote.apply(x);
        for (std::size_t i = 0; i < 64; ++i) CHECK(a[i] == b[i]); // bitwise
    }
}
