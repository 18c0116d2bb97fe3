#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "proxns/experiment.hpp"

using namespace proxns;
namespace fs = std::filesystem;

namespace {

json minimal_config(const std::string& out_dir) {
    return json{{"label", "smoke"},
                {"image", {{"kind", "blobs"}, {"rows", 16}, {"cols", 16}, {"seed", 2}}},
                {"operator", {{"kind", "identity"}}},
                {"snr_db", 15.0},
                {"model",
                 {{"kind", "wavelet_l1"},
                  {"family", "haar"},
                  {"levels", 2},
                  {"mu", 5.0},
                  {"mh_correction", true}}},
                {"run",
                 {{"delta", 2e-4},
                  {"lambda_my", 2e-4},
                  {"n_live", 20},
                  {"n_dead", 200},
                  {"thinning", 5},
                  {"burn_in", 50},
                  {"rng_seed", 42}}},
                {"output_dir", out_dir}};
}

} // namespace

TEST_CASE("simulate_observation hits the requested SNR on average", "[experiment]") {
    const ImageVector truth = make_blob_image(16, 16, 1);
    const auto mask = make_mask(256, 0.5, 3);
    const MaskedFourierOperator op(16, 16, mask);
    const ComplexVector clean = op.forward(truth);

    Rng rng(7);
    double snr_sum = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        auto [y, sigma] = simulate_observation(truth, op, 15.0, rng);
        CHECK(sigma > 0.0);
        snr_sum += 20.0 * std::log10(norm(clean) / std::sqrt(squared_distance(y, clean)));
    }
    CHECK(snr_sum / 10.0 == Catch::Approx(15.0).margin(1.0));
}

TEST_CASE("simulate_observation respects the noise-free flag and the seed", "[experiment]") {
    const ImageVector truth = make_blob_image(8, 8, 1);
    const IdentityOperator op(8, 8);

    Rng rng(3);
    auto [clean, sigma] = simulate_observation(truth, op, 15.0, rng, /*disable_noise=*/true);
    const ComplexVector direct = op.forward(truth);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        CHECK(clean.re[i] == direct.re[i]);
        CHECK(clean.im[i] == direct.im[i]);
    }

    Rng ra(11), rb(11);
    auto [ya, sa] = simulate_observation(truth, op, 15.0, ra);
    auto [yb, sb] = simulate_observation(truth, op, 15.0, rb);
    CHECK(sa == sb);
    for (std::size_t i = 0; i < ya.size(); ++i) CHECK(ya.re[i] == yb.re[i]);

    CHECK_THROWS_AS(simulate_observation(ImageVector(8, 8), op, 15.0, ra), std::invalid_argument);
}

TEST_CASE("run_experiment smoke test emits all artifacts", "[experiment]") {
    const fs::path out = fs::path("test_out_smoke");
    fs::remove_all(out);
    const ExperimentConfig cfg = parse_experiment_config(minimal_config(out.string()));
    const MetricsReport report = run_experiment(cfg);

    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "posterior_mean.bin"));
    CHECK(fs::exists(out / "posterior_mean.json"));
    CHECK(fs::exists(out / "run_log.jsonl"));
    CHECK(std::isfinite(report.log_evidence));
    CHECK(std::isfinite(report.snr_db_reconstruction));
    CHECK(report.n_dead == 200);

    // Round trip through the serialised report.
    std::ifstream in(out / "report.json");
    const MetricsReport back = MetricsReport::from_json(json::parse(in));
    CHECK(back.log_evidence == report.log_evidence);
    CHECK(back.data_seed_hash == report.data_seed_hash);

    const ImageVector mean = read_image(out / "posterior_mean.bin");
    CHECK(mean.rows() == 16);
    CHECK(mean.cols() == 16);

    std::ifstream log(out / "run_log.jsonl");
    long lines = 0;
    std::string line;
    while (std::getline(log, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 200);
}

TEST_CASE("both models run against the same observation and compare", "[experiment]") {
    json base = minimal_config("test_out_wavelet");
    base["image"] = {{"kind", "blobs"}, {"rows", 16}, {"cols", 16}, {"seed", 4}};
    base["operator"] = {{"kind", "masked_fourier"}, {"fraction", 0.5}, {"mask_seed", 9}};
    base["run"]["n_live"] = 15;
    base["run"]["n_dead"] = 100;
    base["run"]["thinning"] = 3;
    base["run"]["burn_in"] = 20;
    base["label"] = "wavelet";

    json dd = base;
    dd["label"] = "data_driven";
    dd["model"] = {{"kind", "data_driven"},
                   {"alpha", 1.0},
                   {"denoiser", {{"kind", "gaussian_smooth"}, {"width", 1.0}, {"epsilon", 0.05}}}};
    dd["output_dir"] = "test_out_dd";

    fs::remove_all("test_out_wavelet");
    fs::remove_all("test_out_dd");
    const MetricsReport ra = run_experiment(parse_experiment_config(base));
    const MetricsReport rb = run_experiment(parse_experiment_config(dd));
    CHECK(ra.data_seed_hash == rb.data_seed_hash); // same observation

    const ComparisonRecord rec = compare_models(ra, rb);
    CHECK(rec.log_bayes_factor == Catch::Approx(ra.log_evidence - rb.log_evidence));
    CHECK(std::isfinite(rec.combined_error));
}

TEST_CASE("compare_models decision rule", "[experiment]") {
    MetricsReport a, b;
    a.label = "a";
    b.label = "b";
    a.data_seed_hash = b.data_seed_hash = "feed";
    a.log_evidence = b.log_evidence = -100.0;
    a.log_evidence_std = b.log_evidence_std = 0.5;

    const ComparisonRecord same = compare_models(a, b);
    CHECK(same.log_bayes_factor == 0.0);
    CHECK(same.preferred == "inconclusive");

    a.log_evidence = -1350.0;
    b.log_evidence = -2960.0;
    a.log_evidence_std = b.log_evidence_std = 1.0;
    const ComparisonRecord strong = compare_models(a, b);
    CHECK(strong.log_bayes_factor == Catch::Approx(1610.0));
    CHECK(strong.preferred == "a");
    CHECK(strong.preferred_label() == "a");

    a.log_evidence = -100.0;
    b.log_evidence = -101.0; // |BF| = 1 < 3 * sqrt(0.5)
    const ComparisonRecord weak = compare_models(a, b);
    CHECK(weak.preferred == "inconclusive");

    b.data_seed_hash = "beef";
    CHECK_THROWS_AS(compare_models(a, b), std::invalid_argument);
}

TEST_CASE("experiment re-runs are byte-identical in the evidence fields", "[experiment]") {
    json j = minimal_config("test_out_det_a");
    j["run"]["n_dead"] = 80;
    fs::remove_all("test_out_det_a");
    fs::remove_all("test_out_det_b");
    run_experiment(parse_experiment_config(j));
    j["output_dir"] = "test_out_det_b";
    run_experiment(parse_experiment_config(j));

    std::ifstream fa("test_out_det_a/report.json"), fb("test_out_det_b/report.json");
    const json ja = json::parse(fa), jb = json::parse(fb);
    CHECK(ja["log_evidence"].dump() == jb["log_evidence"].dump());
    CHECK(ja["log_evidence_std"].dump() == jb["log_evidence_std"].dump());
    CHECK(ja["data_seed_hash"].dump() == jb["data_seed_hash"].dump());
}

TEST_CASE("config parsing reports problems as config errors", "[experiment]") {
    CHECK_THROWS_AS(parse_experiment_config(json{{"snr_db", 15.0}}), std::invalid_argument);

    json bad = minimal_config("x");
    bad["model"]["kind"] = "unknown";
    CHECK_THROWS_AS(parse_experiment_config(bad), std::invalid_argument);

    json bad2 = minimal_config("x");
    bad2["operator"] = {{"kind", "masked_fourier"}, {"fraction", 1.7}};
    const ExperimentConfig cfg = parse_experiment_config(bad2);
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument); // fraction out of range
}

TEST_CASE("experiments can load the truth image from disk", "[experiment]") {
    fs::remove_all("test_out_file");
    fs::create_directories("test_out_file");
    const ImageVector truth = make_blob_image(16, 16, 9);
    write_image("test_out_file/truth.bin", truth);
    const ImageVector back = read_image("test_out_file/truth.bin");
    CHECK(std::sqrt(squared_distance(back, truth)) == 0.0);

    json j = minimal_config("test_out_file/out");
    j["image"] = {{"kind", "file"}, {"path", "test_out_file/truth.bin"}};
    j["run"]["n_dead"] = 60;
    const MetricsReport report = run_experiment(parse_experiment_config(j));
    CHECK(std::isfinite(report.log_evidence));
    CHECK(fs::exists("test_out_file/out/report.json"));
}

TEST_CASE("blob image generator is deterministic and finite", "[experiment]") {
    const ImageVector a = make_blob_image(16, 16, 5);
    const ImageVector b = make_blob_image(16, 16, 5);
    const ImageVector c = make_blob_image(16, 16, 6);
    bool equal = true, differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        equal = equal && a[i] == b[i];
        differs = differs || a[i] != c[i];
    }
    CHECK(equal);
    CHECK(differs);
    CHECK(norm(a) > 0.0);
}
