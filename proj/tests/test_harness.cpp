// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "memlab/analysis.hpp"
#include "memlab/config.hpp"
#include "memlab/experiment.hpp"
#include "memlab/identities.hpp"
#include "memlab/rng.hpp"
#include "memlab/sampler.hpp"

using namespace memlab;

namespace {

Trajectory make_random_trajectory(int dim, int n_steps, std::uint64_t seed) {
    Rng rng(seed);
    Trajectory traj;
    traj.cond_id = 3;
    traj.g = 7.5;
    traj.seed = seed;
    traj.sampler = SamplerKind::ddim;
    for (int i = 0; i < n_steps; ++i) {
        traj.ts.push_back(100 - 10 * i);
    }
    traj.ts.push_back(0);
    traj.x_T = rng.gaussian_vec(dim);
    traj.latents.push_back(traj.x_T);
    for (int i = 0; i < n_steps; ++i) {
        traj.latents.push_back(rng.gaussian_vec(dim));
        StepPrediction pred;
        pred.eps_uncond = rng.gaussian_vec(dim);
        pred.eps_cond = rng.gaussian_vec(dim);
        pred.eps_tilde = rng.gaussian_vec(dim);
        traj.preds.push_back(pred);
    }
    return traj;
}

bool trajectories_equal(const Trajectory& a, const Trajectory& b) {
    if (a.ts != b.ts || a.cond_id != b.cond_id || a.g != b.g || a.seed != b.seed ||
        a.sampler != b.sampler || a.diverged != b.diverged) {
        return false;
    }
    if ((a.x_T - b.x_T).norm() != 0.0) {
        return false;
    }
    for (size_t i = 0; i < a.latents.size(); ++i) {
        if ((a.latents[i] - b.latents[i]).norm() != 0.0) {
            return false;
        }
    }
    for (size_t i = 0; i < a.preds.size(); ++i) {
        if ((a.preds[i].eps_uncond - b.preds[i].eps_uncond).norm() != 0.0 ||
            (a.preds[i].eps_cond - b.preds[i].eps_cond).norm() != 0.0 ||
            (a.preds[i].eps_tilde - b.preds[i].eps_tilde).norm() != 0.0) {
            return false;
        }
    }
    return true;
}

std::filesystem::path temp_dir(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

const char* kMiniConfig = R"(
# mini experiment
seed = 11
schedule.t_train = 1000
dataset.dim = 16
dataset.dup_factors = 1, 12
model.hidden = 24
model.depth = 3
model.embed_dim = 4
model.time_dim = 4
train.epochs = 40
train.batch = 13
train.lr = 2e-3
sampling.n_seeds = 3
sampling.t_infer = 10
sampling.g = 1.0, 7.5
)";

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("config parser reads sectioned keys, lists and comments") {
    const char* text = R"(
# comment line
seed = 42
schedule.t_train = 500   # trailing comment
schedule.beta_start = 2e-4
schedule.beta_end = 0.04
dataset.dim = 36
dataset.kind = gaussian
dataset.dup_factors = 1, 2, 8
train.epochs = 7
train.optimizer = sgd
sampling.g = 1.0, 3.5, 7.5
sampling.sampler = ddpm
sampling.precision = f32
mem_threshold = 0.6
out = some/dir
)";
    const ExperimentConfig cfg = parse_config_text(text);
    CHECK(cfg.seed == 42);
    CHECK(cfg.t_train == 500);
    CHECK(cfg.beta_start == 2e-4);
    CHECK(cfg.beta_end == 0.04);
    CHECK(cfg.dataset.dim == 36);
    CHECK(cfg.dataset.kind == PatternKind::gaussian);
    CHECK(cfg.dataset.dup_factors == std::vector<int>{1, 2, 8});
    CHECK(cfg.train.epochs == 7);
    CHECK(cfg.train.optimizer == Optimizer::sgd);
    CHECK(cfg.g_values == std::vector<double>{1.0, 3.5, 7.5});
    CHECK(cfg.sampler == SamplerKind::ddpm);
    CHECK(cfg.precision == Precision::f32);
    CHECK(cfg.mem_threshold == 0.6);
    CHECK(cfg.out_dir == std::filesystem::path("some/dir"));
}

TEST_CASE("config parser rejects unknown keys and malformed values") {
    CHECK_THROWS_AS(parse_config_text("bogus.key = 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("seed\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("train.lr = fast\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("dataset.kind = squares\n"), std::invalid_argument);
}

TEST_CASE("finalize derives stage seeds and enforces invariants") {
    ExperimentConfig cfg = parse_config_text("dataset.dup_factors = 1, 4\n");
    cfg.finalize();
    CHECK(cfg.arch.num_conds == 2);
    CHECK(cfg.dataset.seed != 0);
    CHECK(cfg.train.seed != 0);

    ExperimentConfig cfg2 = parse_config_text("dataset.dup_factors = 1, 4\ndataset.seed = 5\n");
    cfg2.finalize();
    CHECK(cfg2.dataset.seed == 5);

    ExperimentConfig bad = parse_config_text("dataset.dup_factors = 1, 4\nsampling.n_seeds = 1\n");
    CHECK_THROWS_AS(bad.finalize(), std::invalid_argument);

    // Shallow schedule never reaches the deep-noise regime.
    ExperimentConfig shallow =
        parse_config_text("dataset.dup_factors = 1, 4\nschedule.t_train = 10\n");
    CHECK_THROWS_AS(shallow.finalize(), std::invalid_argument);
}

TEST_CASE("trajectory file round-trips bitwise and checks sizes") {
    const Trajectory traj = make_random_trajectory(8, 5, 77);
    const auto dir = temp_dir("memlab_traj_io");
    const auto path = dir / "t.mltj";
    dump_trajectory(traj, path);
    CHECK(std::filesystem::file_size(path) == trajectory_file_size(8, 5));
    const Trajectory loaded = load_trajectory(path);
    CHECK(trajectories_equal(traj, loaded));
    std::filesystem::remove_all(dir);
}

TEST_CASE("trajectory loader names the truncation offset and rejects bad magic") {
    const Trajectory traj = make_random_trajectory(8, 5, 78);
    const auto dir = temp_dir("memlab_traj_bad");
    const auto path = dir / "t.mltj";
    dump_trajectory(traj, path);

    std::filesystem::resize_file(path, trajectory_file_size(8, 5) - 13);
    try {
        load_trajectory(path);
        FAIL("expected truncation error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }

    dump_trajectory(traj, path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("ZZZZ", 4);
    }
    CHECK_THROWS_AS(load_trajectory(path), std::runtime_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("sampler is deterministic and honors g = 1 bitwise") {
    const Schedule s = Schedule::linear(1000, 1e-4, 0.02);
    DenoiserArch arch;
    arch.dim = 12;
    arch.num_conds = 2;
    arch.embed_dim = 4;
    arch.time_dim = 4;
    arch.hidden = 16;
    arch.depth = 3;
    const DenoiserParams params = DenoiserParams::init(arch, s, 51);
    const Predictor predict = make_denoiser_predictor(params);

    SamplingSpec spec;
    spec.grid = subsample_timesteps(1000, 10);

    const Trajectory a = sample_trajectory(predict, 12, 1, 1.0, 1234, spec, s);
    const Trajectory b = sample_trajectory(predict, 12, 1, 1.0, 1234, spec, s);
    CHECK(trajectories_equal(a, b));
    for (const StepPrediction& pred : a.preds) {
        CHECK((pred.eps_tilde - pred.eps_cond).norm() == 0.0);
    }

    const Trajectory c = sample_trajectory(predict, 12, 1, 1.0, 1235, spec, s);
    CHECK((c.x_T - a.x_T).norm() > 0.0);
}

TEST_CASE("oracle-backed sampler lands on the memorized latent at g = 1") {
    const Schedule s = Schedule::linear(1000, 1e-4, 0.02);
    Rng rng(80);
    const Vec x = rng.gaussian_vec(16);
    const OracleSpec oracle = OracleSpec::exact(x, s);
    const Predictor predict = make_oracle_predictor(oracle, s);

    SamplingSpec spec;
    spec.grid = subsample_timesteps(1000, 50);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const Trajectory traj = sample_trajectory(predict, 16, 0, 1.0, seed, spec, s);
        CHECK_FALSE(traj.diverged);
        CHECK((traj.x0() - x).lpNorm<Eigen::Infinity>() < 1e-6);
    }
}

TEST_CASE("stochastic sampler records the grid and stays finite") {
    const Schedule s = Schedule::linear(1000, 1e-4, 0.02);
    Rng rng(81);
    const Vec x = rng.gaussian_vec(8);
    const OracleSpec oracle = OracleSpec::exact(x, s);
    const Predictor predict = make_oracle_predictor(oracle, s);

    SamplingSpec spec;
    spec.grid = subsample_timesteps(1000, 10);
    spec.sampler = SamplerKind::ddpm;
    const Trajectory traj = sample_trajectory(predict, 8, 0, 1.0, 42, spec, s);
    CHECK_FALSE(traj.diverged);
    REQUIRE(traj.latents.size() == 11);
    REQUIRE(traj.ts.size() == 11);
    CHECK(traj.ts.front() == 1000);
    CHECK(traj.ts.back() == 0);
    for (const Vec& latent : traj.latents) {
        CHECK(all_finite(latent));
    }
    // Stochasticity: two seeds end at different samples but both near x.
    const Trajectory other = sample_trajectory(predict, 8, 0, 1.0, 43, spec, s);
    CHECK((other.x0() - traj.x0()).norm() > 0.0);
    CHECK((traj.x0() - x).norm() < 1.0);
}

TEST_CASE("diverging predictor flags the trajectory") {
    const Schedule s = Schedule::linear(1000, 1e-4, 0.02);
    const Predictor explode = [](const Vec& x_t, int, std::optional<int>) {
        return Vec(1e200 * x_t);
    };
    SamplingSpec spec;
    spec.grid = subsample_timesteps(1000, 10);
    const Trajectory traj = sample_trajectory(explode, 8, 0, 7.5, 7, spec, s);
    CHECK(traj.diverged);
    REQUIRE(traj.latents.size() == 11);
    for (const Vec& latent : traj.latents) {
        CHECK(latent.size() == 8);  // zero-filled tail keeps the shape
    }
}

TEST_CASE("f32 precision mode rounds every stored value to float") {
    const Schedule s = Schedule::linear(1000, 1e-4, 0.02);
    Rng rng(82);
    const Vec x = rng.gaussian_vec(8);
    const OracleSpec oracle = OracleSpec::exact(x, s);
    const Predictor predict = make_oracle_predictor(oracle, s);
    SamplingSpec spec;
    spec.grid = subsample_timesteps(1000, 10);
    spec.precision = Precision::f32;
    const Trajectory traj = sample_trajectory(predict, 8, 0, 7.5, 9, spec, s);
    for (size_t i = 1; i < traj.latents.size(); ++i) {
        for (int d = 0; d < 8; ++d) {
            const double v = traj.latents[i][d];
            CHECK(static_cast<double>(static_cast<float>(v)) == v);
        }
    }
}

TEST_CASE("identity suite passes") {
    for (const IdentityCheck& check : run_identity_suite()) {
        INFO(check.name, ": worst=", check.worst, " bound=", check.bound);
        CHECK(check.pass);
    }
}

TEST_CASE("mini experiment is deterministic end to end") {
    ExperimentConfig cfg = parse_config_text(kMiniConfig);
    cfg.out_dir = temp_dir("memlab_mini_a");
    cfg.finalize();
    const AnalysisResult first = run_experiment(cfg);
    CHECK(first.rows.size() == 4);  // 2 conds x 2 guidance scales

    ExperimentConfig cfg2 = parse_config_text(kMiniConfig);
    cfg2.out_dir = temp_dir("memlab_mini_b");
    cfg2.finalize();
    run_experiment(cfg2);

    const std::string report_a = read_file(ExperimentPaths::at(cfg.out_dir).report_csv);
    const std::string report_b = read_file(ExperimentPaths::at(cfg2.out_dir).report_csv);
    CHECK(!report_a.empty());
    CHECK(report_a == report_b);

    const std::string traj_a =
        read_file(ExperimentPaths::at(cfg.out_dir).trajectories_dir / "traj_c0001_g01_s0002.mltj");
    const std::string traj_b =
        read_file(ExperimentPaths::at(cfg2.out_dir).trajectories_dir / "traj_c0001_g01_s0002.mltj");
    CHECK(!traj_a.empty());
    CHECK(traj_a == traj_b);

    // Row structure: one row per (cond, g), conditions sorted.
    std::ifstream csv(ExperimentPaths::at(cfg.out_dir).report_csv);
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) {
        ++lines;
    }
    CHECK(lines == 5);  // header + 4 rows

    std::filesystem::remove_all(cfg.out_dir);
    std::filesystem::remove_all(cfg2.out_dir);
}

TEST_CASE("analysis counts diverged trajectories separately") {
    const Schedule s = Schedule::linear(1000, 1e-4, 0.02);
    ExperimentConfig cfg = parse_config_text("dataset.dim = 8\ndataset.dup_factors = 1, 2\n");
    cfg.finalize();
    const ToyDataset ds = make_dataset(cfg.dataset);

    Rng rng(90);
    const OracleSpec oracle = OracleSpec::exact(ds.base[1], s);
    const Predictor predict = make_oracle_predictor(oracle, s);
    SamplingSpec spec;
    spec.grid = subsample_timesteps(1000, 10);

    std::vector<Trajectory> trajs;
    for (int seed = 0; seed < 4; ++seed) {
        Trajectory traj = sample_trajectory(predict, 8, 1, 7.5, 100 + seed, spec, s);
        traj.cond_id = 1;
        trajs.push_back(traj);
    }
    trajs.push_back(trajs.back());
    trajs.back().diverged = true;
    for (Trajectory& t : trajs) {
        t.g = 7.5;
    }
    // Second condition so the Pearson block has two points.
    for (int seed = 0; seed < 2; ++seed) {
        Trajectory traj = sample_trajectory(predict, 8, 0, 7.5, 200 + seed, spec, s);
        traj.cond_id = 0;
        trajs.push_back(traj);
    }

    cfg.g_values = {7.5};
    const AnalysisResult analysis = analyze_trajectories(trajs, ds, s, cfg);
    REQUIRE(analysis.rows.size() == 2);
    CHECK(analysis.rows[1].cond_id == 1);
    CHECK(analysis.rows[1].n_diverged == 1);
    CHECK(analysis.rows[1].n_seeds == 4);
}

TEST_SUITE_END();
