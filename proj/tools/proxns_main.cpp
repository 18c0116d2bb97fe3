// Command-line harness: `run` executes one experiment end to end, `compare`
// forms the log Bayes factor of two finished reports, `prior-sample` draws
// from a configured prior, and `prox-check` runs the operator/prox
// diagnostics suite. Exit codes: 0 success, 1 config error, 2 numerical
// failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "proxns/proxns.hpp"

namespace fs = std::filesystem;
using proxns::json;

namespace {

int cmd_run(const std::string& config_path, const std::optional<std::string>& output_dir,
            const std::optional<std::uint64_t>& seed_override, bool csv, bool trace) {
    proxns::ExperimentConfig cfg = proxns::load_experiment_config(config_path);
    if (output_dir) cfg.output_dir = *output_dir;
    if (seed_override) cfg.run.rng_seed = *seed_override;
    cfg.csv_export = cfg.csv_export || csv;
    cfg.chain_trace = cfg.chain_trace || trace;

    const proxns::MetricsReport report = proxns::run_experiment(cfg);
    std::cout << "log_evidence      " << report.log_evidence << "\n"
              << "log_evidence_std  " << report.log_evidence_std << "\n"
              << "reconstruction    " << report.snr_db_reconstruction << " dB\n"
              << "wall_time         " << report.wall_time_s << " s\n"
              << "report            " << (cfg.output_dir / "report.json").string() << "\n";
    return 0;
}

proxns::MetricsReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open report " + path);
    return proxns::MetricsReport::from_json(json::parse(in));
}

int cmd_compare(const std::string& path_a, const std::string& path_b,
                const std::optional<std::string>& out_path) {
    const proxns::ComparisonRecord rec =
        proxns::compare_models(load_report(path_a), load_report(path_b));
    const json j = rec.to_json();
    std::cout << j.dump(2) << "\n";
    if (out_path) {
        std::ofstream out(*out_path);
        if (!out) throw std::runtime_error("cannot open " + *out_path);
        out << j.dump(2) << "\n";
    }
    return 0;
}

int cmd_prior_sample(const std::string& config_path, long n_samples,
                     const std::optional<std::string>& output_dir) {
    proxns::ExperimentConfig cfg = proxns::load_experiment_config(config_path);
    if (output_dir) cfg.output_dir = *output_dir;

    std::size_t rows = cfg.image.rows, cols = cfg.image.cols;
    if (cfg.image.kind == "file") {
        const proxns::ImageVector truth = proxns::read_image(cfg.image.path);
        rows = truth.rows();
        cols = truth.cols();
    }
    proxns::KernelSpec spec;
    spec.rows = rows;
    spec.cols = cols;
    spec.cfg = cfg.run;
    if (cfg.model.kind == "wavelet_l1") {
        auto dict = std::make_shared<proxns::WaveletDictionary>(
            proxns::wavelet_family_from_string(cfg.model.family), cfg.model.levels, rows, cols);
        spec.variant = proxns::KernelVariant::LangevinMyPrior;
        spec.prior = std::make_shared<proxns::WaveletL1Prior>(std::move(dict), cfg.model.mu);
        spec.mh_correction = cfg.model.mh_correction;
        spec.cfg.mu = cfg.model.mu;
    } else {
        spec.variant = proxns::KernelVariant::DataDriven;
        spec.denoiser = proxns::detail::build_denoiser(cfg.model.denoiser, rows, cols);
        spec.cfg.epsilon = spec.denoiser->epsilon();
        spec.cfg.alpha = cfg.model.alpha;
    }
    for (const auto& w : proxns::validate_kernel_spec(spec))
        std::cerr << "warning: " << w << "\n";

    proxns::Rng rng = proxns::Rng(cfg.run.rng_seed).stream(3);
    const auto samples = proxns::sample_prior(spec, n_samples, rng);
    fs::create_directories(cfg.output_dir);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "prior_sample_%04zu.bin", i);
        proxns::write_image(cfg.output_dir / name, samples[i]);
    }
    std::cout << "wrote " << samples.size() << " prior samples to " << cfg.output_dir.string()
              << "\n";
    return 0;
}

int cmd_prox_check(const std::string& config_path, int pairs) {
    proxns::ExperimentConfig cfg = proxns::load_experiment_config(config_path);
    const proxns::ImageVector truth_image =
        cfg.image.kind == "file" ? proxns::read_image(cfg.image.path)
                                 : proxns::make_blob_image(cfg.image.rows, cfg.image.cols,
                                                           cfg.image.seed);
    const std::size_t rows = truth_image.rows(), cols = truth_image.cols();
    auto op = proxns::detail::build_operator(cfg, rows, cols);
    proxns::Rng rng(cfg.run.rng_seed);
    bool all_ok = true;

    const auto report = [&all_ok](const std::string& name, bool ok, double value) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << "  (" << value << ")\n";
        all_ok = all_ok && ok;
    };

    const double adj = proxns::adjoint_mismatch(*op, rng, pairs);
    report("operator adjoint identity", adj < 1e-10, adj);

    const double norm_est = proxns::power_iteration_norm(*op);
    report("operator norm bound", op->operator_norm_bound() >= norm_est - 1e-9, norm_est);

    {
        proxns::ImageVector x(rows, cols);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
        if (proxns::is_power_of_two(rows) && proxns::is_power_of_two(cols)) {
            const auto coeffs = proxns::fft2_forward(x);
            const double drift = std::abs(proxns::norm(coeffs) - proxns::norm(x));
            report("fft unitarity", drift < 1e-10, drift);
        }
    }

    if (cfg.model.kind == "wavelet_l1") {
        proxns::WaveletDictionary dict(proxns::wavelet_family_from_string(cfg.model.family),
                                       cfg.model.levels, rows, cols);
        proxns::ImageVector x(rows, cols);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
        const auto coeffs = dict.analysis(x);
        const auto back = dict.synthesis(coeffs);
        const double rt = std::sqrt(proxns::squared_distance(back, x));
        report("wavelet round trip", rt < 1e-10, rt);

        auto prior = std::make_shared<proxns::WaveletL1Prior>(
            std::make_shared<proxns::WaveletDictionary>(dict), cfg.model.mu);
        proxns::MoreauEnvelope env(prior, cfg.run.lambda_my);
        const proxns::ImageVector g = env.gradient(x);
        double worst = 0.0;
        const double h = 1e-6;
        for (std::size_t i = 0; i < std::min<std::size_t>(x.size(), 8); ++i) {
            proxns::ImageVector xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (env.value(xp) - env.value(xm)) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
        }
        report("envelope gradient vs finite differences", worst < 1e-4, worst);
    }

    {
        // Projection diagnostics on simulated data from this config.
        proxns::Rng rng_data = proxns::Rng(cfg.run.rng_seed).stream(1);
        const proxns::ImageVector& truth = truth_image;
        auto [y, sigma] = proxns::simulate_observation(truth, *op, cfg.snr_db, rng_data);
        auto like = std::make_shared<proxns::GaussianLikelihood>(std::move(y), op, sigma);
        proxns::ImageVector x(rows, cols);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = 2.0 * rng.normal();
        const double tau = 0.5 * like->quadratic(truth);

        // Cold-start probes need a larger budget than the warm-started
        // production defaults.
        proxns::PrimalDualConfig pd;
        pd.max_iters = 20000;
        pd.tol = 1e-9;
        const auto proj = proxns::constraint_project(x, tau, *like, pd);
        report("projection feasibility", proj.converged && proj.residual < 1e-4, proj.residual);
        const auto twice = proxns::constraint_project(proj.x, tau, *like, pd);
        const double move = std::sqrt(proxns::squared_distance(twice.x, proj.x));
        report("projection idempotence", move < 1e-6 * std::max(1.0, proxns::norm(proj.x)), move);

        if (op->rows_orthonormal()) {
            proxns::PrimalDualConfig forced = pd;
            forced.force_primal_dual = true;
            const auto iterative = proxns::constraint_project(x, tau, *like, forced);
            const double gap = std::sqrt(proxns::squared_distance(iterative.x, proj.x));
            report("primal-dual vs closed-form projection", gap < 1e-6, gap);
        }
    }

    return all_ok ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"proximal nested sampling harness"};
    app.require_subcommand(1);

    std::string config_path, report_a, report_b;
    std::optional<std::string> output_dir, compare_out;
    std::optional<std::uint64_t> seed_override;
    bool csv = false, trace = false;
    long n_samples = 16;
    int pairs = 100;

    CLI::App* run = app.add_subcommand("run", "run one experiment");
    run->add_option("--config", config_path, "experiment config JSON")->required();
    run->add_option("--output-dir", [&output_dir](const std::vector<std::string>& v) {
        output_dir = v.back();
        return true;
    }, "override the config output_dir");
    run->add_option("--seed-override", [&seed_override](const std::vector<std::string>& v) {
        seed_override = std::stoull(v.back());
        return true;
    }, "replace run.rng_seed");
    run->add_flag("--csv", csv, "also export posterior_mean.csv");
    run->add_flag("--trace", trace, "emit chain_trace.csv");

    CLI::App* compare = app.add_subcommand("compare", "compare two reports");
    compare->add_option("report_a", report_a, "first report.json")->required();
    compare->add_option("report_b", report_b, "second report.json")->required();
    compare->add_option("--output", [&compare_out](const std::vector<std::string>& v) {
        compare_out = v.back();
        return true;
    }, "write the comparison record here");

    CLI::App* prior = app.add_subcommand("prior-sample", "draw samples from the configured prior");
    prior->add_option("--config", config_path, "experiment config JSON")->required();
    prior->add_option("-n,--samples", n_samples, "number of samples")->capture_default_str();
    prior->add_option("--output-dir", [&output_dir](const std::vector<std::string>& v) {
        output_dir = v.back();
        return true;
    }, "override the config output_dir");

    CLI::App* check = app.add_subcommand("prox-check", "operator and prox diagnostics");
    check->add_option("--config", config_path, "experiment config JSON")->required();
    check->add_option("--pairs", pairs, "random pairs for the adjoint test")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1; // command-line problems are config errors
    }

    try {
        if (run->parsed()) return cmd_run(config_path, output_dir, seed_override, csv, trace);
        if (compare->parsed()) return cmd_compare(report_a, report_b, compare_out);
        if (prior->parsed()) return cmd_prior_sample(config_path, n_samples, output_dir);
        if (check->parsed()) return cmd_prox_check(config_path, pairs);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
