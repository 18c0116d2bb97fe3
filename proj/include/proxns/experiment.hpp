#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proxns/core.hpp"
#include "proxns/denoiser.hpp"
#include "proxns/denoiser_bridge.hpp"
#include "proxns/io.hpp"
#include "proxns/nested.hpp"
#include "proxns/operators.hpp"
#include "proxns/potentials.hpp"
#include "proxns/rng.hpp"
#include "proxns/wavelets.hpp"

namespace proxns {

using json = nlohmann::json;

/// Smooth non-negative test image: a few Gaussian blobs, deterministic in the
/// seed.
inline ImageVector make_blob_image(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    ImageVector img(rows, cols);
    const double scale = static_cast<double>(std::min(rows, cols));
    for (int blob = 0; blob < 3; ++blob) {
        const double cr = rng.uniform() * static_cast<double>(rows);
        const double cc = rng.uniform() * static_cast<double>(cols);
        const double w = (0.06 + 0.10 * rng.uniform()) * scale;
        const double amp = 0.4 + 0.6 * rng.uniform();
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                const double dr = (static_cast<double>(r) - cr) / w;
                const double dc = (static_cast<double>(c) - cc) / w;
                img.at(r, c) += amp * std::exp(-0.5 * (dr * dr + dc * dc));
            }
        }
    }
    return img;
}

struct OperatorSpec {
    std::string kind = "identity"; // identity | masked_identity | masked_fourier
    double fraction = 0.5;
    std::uint64_t mask_seed = 0;
};

struct DenoiserSpec {
    std::string kind = "gaussian_smooth"; // gaussian_smooth | analytic_gaussian | external
    double width = 1.0;                   // gaussian_smooth
    double variance = 1.0;                // analytic_gaussian
    double epsilon = 0.1;
    std::vector<std::string> command; // external
    int timeout_ms = 10000;
};

struct ModelSpec {
    std::string kind = "wavelet_l1"; // wavelet_l1 | data_driven
    std::string family = "daubechies6";
    int levels = 2;
    double mu = 1.0;
    bool mh_correction = true;
    double alpha = 1.0;
    DenoiserSpec denoiser;
};

struct ImageSpec {
    std::string kind = "blobs"; // blobs | file
    std::size_t rows = 32;
    std::size_t cols = 32;
    std::uint64_t seed = 1;
    std::string path;
};

struct ExperimentConfig {
    std::string label = "model";
    ImageSpec image;
    OperatorSpec op;
    double snr_db = 15.0;
    bool disable_noise = false;
    ModelSpec model;
    RunConfig run;
    bool chain_trace = false;
    bool csv_export = false;
    std::filesystem::path output_dir = "out";
};

inline ExperimentConfig parse_experiment_config(const json& j) {
    try {
        ExperimentConfig cfg;
        cfg.label = j.value("label", std::string("model"));

        const json ji = j.at("image");
        cfg.image.kind = ji.value("kind", std::string("blobs"));
        if (cfg.image.kind == "blobs") {
            cfg.image.rows = ji.at("rows").get<std::size_t>();
            cfg.image.cols = ji.at("cols").get<std::size_t>();
            cfg.image.seed = ji.value("seed", std::uint64_t{1});
        } else if (cfg.image.kind == "file") {
            cfg.image.path = ji.at("path").get<std::string>();
        } else {
            throw std::invalid_argument("image.kind must be 'blobs' or 'file'");
        }

        const json jo = j.at("operator");
        cfg.op.kind = jo.at("kind").get<std::string>();
        if (cfg.op.kind != "identity") {
            cfg.op.fraction = jo.at("fraction").get<double>();
            cfg.op.mask_seed = jo.value("mask_seed", std::uint64_t{0});
        }

        cfg.snr_db = j.at("snr_db").get<double>();
        cfg.disable_noise = j.value("disable_noise", false);

        const json jm = j.at("model");
        cfg.model.kind = jm.at("kind").get<std::string>();
        if (cfg.model.kind == "wavelet_l1") {
            cfg.model.family = jm.value("family", std::string("daubechies6"));
            cfg.model.levels = jm.value("levels", 2);
            cfg.model.mu = jm.at("mu").get<double>();
            cfg.model.mh_correction = jm.value("mh_correction", true);
        } else if (cfg.model.kind == "data_driven") {
            cfg.model.alpha = jm.value("alpha", 1.0);
            const json jd = jm.at("denoiser");
            cfg.model.denoiser.kind = jd.at("kind").get<std::string>();
            cfg.model.denoiser.epsilon = jd.at("epsilon").get<double>();
            if (cfg.model.denoiser.kind == "gaussian_smooth") {
                cfg.model.denoiser.width = jd.value("width", 1.0);
            } else if (cfg.model.denoiser.kind == "analytic_gaussian") {
                cfg.model.denoiser.variance = jd.value("variance", 1.0);
            } else if (cfg.model.denoiser.kind == "external") {
                cfg.model.denoiser.command = jd.at("command").get<std::vector<std::string>>();
                cfg.model.denoiser.timeout_ms = jd.value("timeout_ms", 10000);
            } else {
                throw std::invalid_argument("unknown denoiser kind: " + cfg.model.denoiser.kind);
            }
        } else {
            throw std::invalid_argument("model.kind must be 'wavelet_l1' or 'data_driven'");
        }

        const json jr = j.at("run");
        cfg.run.delta = jr.at("delta").get<double>();
        cfg.run.lambda_my = jr.at("lambda_my").get<double>();
        cfg.run.n_live = jr.at("n_live").get<long>();
        cfg.run.n_dead = jr.at("n_dead").get<long>();
        cfg.run.thinning = jr.value("thinning", 20L);
        cfg.run.burn_in = jr.value("burn_in", 100L);
        cfg.run.rng_seed = jr.value("rng_seed", std::uint64_t{0});

        if (j.contains("debug")) cfg.chain_trace = j["debug"].value("chain_trace", false);
        cfg.output_dir = j.value("output_dir", std::string("out"));
        return cfg;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    return parse_experiment_config(j);
}

/// Simulated observation y = Phi truth + n. The noise std sigma is set from
/// the target data-space SNR, 20 log10(||Phi truth|| / (sigma sqrt(dof))),
/// not from the realised noise draw. Complex-output operators receive
/// circular noise (independent per real component); real-output operators
/// only on the real part. Draw order: per element, re then im.
inline std::pair<ComplexVector, double> simulate_observation(const ImageVector& truth,
                                                             const MeasurementOperator& op,
                                                             double snr_db, Rng& rng,
                                                             bool disable_noise = false) {
    if (!all_finite(truth.values())) throw std::invalid_argument("simulate_observation: non-finite truth");
    ComplexVector y = op.forward(truth);
    const double signal = norm(y);
    if (signal <= 0.0) throw std::invalid_argument("simulate_observation: zero-signal truth");
    const double dof = static_cast<double>(op.output_real_dof());
    const double sigma = signal * std::pow(10.0, -snr_db / 20.0) / std::sqrt(dof);
    if (!disable_noise) {
        const bool complex_noise = op.complex_output();
        for (std::size_t i = 0; i < y.size(); ++i) {
            y.re[i] += sigma * rng.normal();
            if (complex_noise) y.im[i] += sigma * rng.normal();
        }
    }
    return {std::move(y), sigma};
}

struct MetricsReport {
    std::string label;
    double snr_db_reconstruction = 0.0;
    double log_evidence = 0.0;
    double log_evidence_std = 0.0;
    double information_nats = 0.0;
    double sigma = 0.0;
    double wall_time_s = 0.0;
    std::string data_seed_hash;
    NsDiagnostics diagnostics;
    long n_live = 0;
    long n_dead = 0;

    json to_json() const {
        return json{{"label", label},
                    {"snr_db_reconstruction", snr_db_reconstruction},
                    {"log_evidence", log_evidence},
                    {"log_evidence_std", log_evidence_std},
                    {"information_nats", information_nats},
                    {"sigma", sigma},
                    {"wall_time_s", wall_time_s},
                    {"data_seed_hash", data_seed_hash},
                    {"n_live", n_live},
                    {"n_dead", n_dead},
                    {"diagnostics",
                     json{{"kernel_steps", diagnostics.kernel_steps},
                          {"mh_proposals", diagnostics.mh_proposals},
                          {"mh_accepted", diagnostics.mh_accepted},
                          {"proj_nonconverged", diagnostics.proj_nonconverged},
                          {"replacement_fallbacks", diagnostics.replacement_fallbacks},
                          {"max_proj_residual", diagnostics.max_proj_residual}}}};
    }

    static MetricsReport from_json(const json& j) {
        MetricsReport r;
        r.label = j.at("label").get<std::string>();
        r.snr_db_reconstruction = j.at("snr_db_reconstruction").get<double>();
        r.log_evidence = j.at("log_evidence").get<double>();
        r.log_evidence_std = j.at("log_evidence_std").get<double>();
        r.information_nats = j.value("information_nats", 0.0);
        r.sigma = j.value("sigma", 0.0);
        r.wall_time_s = j.value("wall_time_s", 0.0);
        r.data_seed_hash = j.at("data_seed_hash").get<std::string>();
        r.n_live = j.value("n_live", 0L);
        r.n_dead = j.value("n_dead", 0L);
        if (j.contains("diagnostics")) {
            const json& d = j["diagnostics"];
            r.diagnostics.kernel_steps = d.value("kernel_steps", 0LL);
            r.diagnostics.mh_proposals = d.value("mh_proposals", 0LL);
            r.diagnostics.mh_accepted = d.value("mh_accepted", 0LL);
            r.diagnostics.proj_nonconverged = d.value("proj_nonconverged", 0LL);
            r.diagnostics.replacement_fallbacks = d.value("replacement_fallbacks", 0LL);
            r.diagnostics.max_proj_residual = d.value("max_proj_residual", 0.0);
        }
        return r;
    }
};

namespace detail {

inline std::shared_ptr<const MeasurementOperator> build_operator(const ExperimentConfig& cfg,
                                                                 std::size_t rows, std::size_t cols) {
    if (cfg.op.kind == "identity") return std::make_shared<IdentityOperator>(rows, cols);
    const auto mask = make_mask(rows * cols, cfg.op.fraction, cfg.op.mask_seed);
    if (cfg.op.kind == "masked_identity")
        return std::make_shared<MaskedIdentityOperator>(rows, cols, mask);
    if (cfg.op.kind == "masked_fourier")
        return std::make_shared<MaskedFourierOperator>(rows, cols, mask);
    throw std::invalid_argument("unknown operator kind: " + cfg.op.kind);
}

inline std::shared_ptr<const Denoiser> build_denoiser(const DenoiserSpec& d, std::size_t rows,
                                                      std::size_t cols) {
    if (d.kind == "gaussian_smooth")
        return std::make_shared<GaussianSmoothingDenoiser>(d.width, d.epsilon);
    if (d.kind == "analytic_gaussian")
        return std::make_shared<AnalyticGaussianDenoiser>(ImageVector(rows, cols), d.variance,
                                                          d.epsilon);
    if (d.kind == "external")
        return std::make_shared<ExternalDenoiser>(d.command, d.epsilon, d.timeout_ms);
    throw std::invalid_argument("unknown denoiser kind: " + d.kind);
}

inline std::string hash_hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

/// Fingerprint of the observation a run conditioned on.
inline std::string data_seed_hash(const ExperimentConfig& cfg, const ComplexVector& y, double sigma) {
    std::uint64_t h = fnv1a(y.re.data(), y.re.size() * sizeof(double));
    h = fnv1a(y.im.data(), y.im.size() * sizeof(double), h);
    h = fnv1a(&sigma, sizeof(sigma), h);
    h = fnv1a(cfg.op.kind.data(), cfg.op.kind.size(), h);
    h = fnv1a(&cfg.snr_db, sizeof(cfg.snr_db), h);
    return hash_hex(h);
}

} // namespace detail

/// Runs the full pipeline: simulate the observation, nested-sample the
/// configured model, and write report.json, posterior_mean.bin/.json and
/// run_log.jsonl (plus optional chain_trace.csv) under output_dir.
inline MetricsReport run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg.run);
    const auto t0 = std::chrono::steady_clock::now();

    const ImageVector truth = cfg.image.kind == "file"
                                  ? read_image(cfg.image.path)
                                  : make_blob_image(cfg.image.rows, cfg.image.cols, cfg.image.seed);
    const std::size_t rows = truth.rows(), cols = truth.cols();

    auto op = detail::build_operator(cfg, rows, cols);

    Rng master(cfg.run.rng_seed);
    Rng rng_data = master.stream(1);
    Rng rng_ns = master.stream(2);

    auto [y, sigma] = simulate_observation(truth, *op, cfg.snr_db, rng_data, cfg.disable_noise);
    const std::string hash = detail::data_seed_hash(cfg, y, sigma);

    RunConfig run = cfg.run;
    run.sigma = sigma;

    NestedModel model;
    model.rows = rows;
    model.cols = cols;
    model.likelihood = std::make_shared<GaussianLikelihood>(std::move(y), op, sigma);
    if (cfg.model.kind == "wavelet_l1") {
        auto dict = std::make_shared<WaveletDictionary>(wavelet_family_from_string(cfg.model.family),
                                                        cfg.model.levels, rows, cols);
        model.prior = std::make_shared<WaveletL1Prior>(std::move(dict), cfg.model.mu);
        model.variant = KernelVariant::LangevinMyPrior;
        model.mh_correction = cfg.model.mh_correction;
        run.mu = cfg.model.mu;
    } else {
        model.denoiser = detail::build_denoiser(cfg.model.denoiser, rows, cols);
        model.variant = KernelVariant::DataDriven;
        model.mh_correction = false;
        run.epsilon = model.denoiser->epsilon();
        run.alpha = cfg.model.alpha;
    }

    std::filesystem::create_directories(cfg.output_dir);

    std::ofstream run_log(cfg.output_dir / "run_log.jsonl");
    if (!run_log) throw std::runtime_error("run_experiment: cannot open run_log.jsonl");
    run_log.precision(17);
    RunLogFn log_fn = [&run_log](long iter, double tau, double dead_ll, double log_z) {
        json line{{"iter", iter}, {"tau", tau}, {"dead_log_like", dead_ll}, {"log_z", log_z}};
        run_log << line.dump() << "\n";
    };

    std::ofstream trace_file;
    TraceFn trace;
    long trace_counter = 0;
    if (cfg.chain_trace) {
        trace_file.open(cfg.output_dir / "chain_trace.csv");
        trace_file << "iteration,log_likelihood,accepted\n";
        trace_file.precision(17);
        const GaussianLikelihood* like = model.likelihood.get();
        trace = [&trace_file, &trace_counter, like](long, const ImageVector& x, bool accepted) {
            trace_file << trace_counter++ << "," << like->log_likelihood(x) << ","
                       << (accepted ? 1 : 0) << "\n";
        };
    }

    const NestedRunResult result = run_nested(model, run, rng_ns, log_fn, trace);

    const ImageVector mean = result.posterior_mean_image;
    write_image(cfg.output_dir / "posterior_mean.bin", mean);
    if (cfg.csv_export) write_image_csv(cfg.output_dir / "posterior_mean.csv", mean);

    MetricsReport report;
    report.label = cfg.label;
    report.log_evidence = result.log_evidence;
    report.log_evidence_std = result.log_evidence_std;
    report.information_nats = result.information_nats;
    report.sigma = sigma;
    report.data_seed_hash = hash;
    report.diagnostics = result.diagnostics;
    report.n_live = run.n_live;
    report.n_dead = run.n_dead;
    report.snr_db_reconstruction =
        20.0 * std::log10(norm(truth) / std::sqrt(squared_distance(truth, mean)));
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ofstream rep(cfg.output_dir / "report.json");
    if (!rep) throw std::runtime_error("run_experiment: cannot open report.json");
    rep << report.to_json().dump(2) << "\n";
    return report;
}

struct ComparisonRecord {
    double log_bayes_factor = 0.0;
    double combined_error = 0.0;
    std::string preferred = "inconclusive"; // "a", "b" or "inconclusive"
    std::string label_a, label_b;

    std::string preferred_label() const {
        if (preferred == "a") return label_a;
        if (preferred == "b") return label_b;
        return preferred;
    }

    json to_json() const {
        return json{{"log_bayes_factor", log_bayes_factor},
                    {"combined_error", combined_error},
                    {"preferred", preferred},
                    {"preferred_label", preferred_label()},
                    {"label_a", label_a},
                    {"label_b", label_b}};
    }
};

/// log Z_a - log Z_b with combined error; a model is preferred only when the
/// log Bayes factor clears three combined errors. Reports must describe the
/// same observation (equal data hashes).
inline ComparisonRecord compare_models(const MetricsReport& a, const MetricsReport& b) {
    if (a.data_seed_hash != b.data_seed_hash)
        throw std::invalid_argument("compare_models: reports describe different observations");
    ComparisonRecord rec;
    rec.label_a = a.label;
    rec.label_b = b.label;
    rec.log_bayes_factor = a.log_evidence - b.log_evidence;
    rec.combined_error = std::sqrt(a.log_evidence_std * a.log_evidence_std +
                                   b.log_evidence_std * b.log_evidence_std);
    if (std::abs(rec.log_bayes_factor) > 3.0 * rec.combined_error)
        rec.preferred = rec.log_bayes_factor > 0.0 ? "a" : "b";
    return rec;
}

} // namespace proxns
