// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <stdexcept>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "memlab/dataset.hpp"
#include "memlab/denoiser.hpp"
#include "memlab/rng.hpp"
#include "memlab/trainer.hpp"

using namespace memlab;

namespace {

DatasetSpec small_spec() {
    DatasetSpec spec;
    spec.dim = 16;
    spec.dup_factors = {1, 4};
    spec.seed = 99;
    return spec;
}

const Schedule& test_schedule() {
    static const Schedule s = Schedule::linear(1000, 1e-4, 0.02);
    return s;
}

DenoiserArch mini_arch(int dim, int num_conds) {
    DenoiserArch arch;
    arch.dim = dim;
    arch.num_conds = num_conds;
    arch.embed_dim = 3;
    arch.time_dim = 4;
    arch.hidden = 8;
    arch.depth = 3;
    return arch;
}

bool params_equal(const DenoiserParams& a, const DenoiserParams& b) {
    const std::size_t n = param_count(a);
    if (n != param_count(b)) {
        return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (param_get(a, i) != param_get(b, i)) {
            return false;
        }
    }
    return true;
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE_BEGIN("toy_model");

TEST_CASE("make_dataset duplicates exactly and deterministically") {
    DatasetSpec spec;
    spec.dim = 64;
    spec.dup_factors = {1, 64};
    spec.seed = 7;
    const ToyDataset ds = make_dataset(spec);
    CHECK(ds.items.size() == 65);
    CHECK(ds.num_conds() == 2);
    int cond1 = 0;
    for (const DatasetItem& item : ds.items) {
        if (item.cond_id == 1) {
            ++cond1;
            CHECK((item.x - ds.base[1]).norm() == 0.0);
        }
        for (int i = 0; i < spec.dim; ++i) {
            CHECK(item.x[i] >= -1.0);
            CHECK(item.x[i] <= 1.0);
        }
    }
    CHECK(cond1 == 64);

    const ToyDataset again = make_dataset(spec);
    REQUIRE(again.items.size() == ds.items.size());
    for (size_t i = 0; i < ds.items.size(); ++i) {
        CHECK((again.items[i].x - ds.items[i].x).norm() == 0.0);
        CHECK(again.items[i].cond_id == ds.items[i].cond_id);
    }
}

TEST_CASE("make_dataset item count equals the dup_factor total") {
    DatasetSpec spec;
    spec.dim = 36;
    spec.dup_factors = {1, 2, 3, 5, 8};
    spec.seed = 3;
    const ToyDataset ds = make_dataset(spec);
    const int total = std::accumulate(spec.dup_factors.begin(), spec.dup_factors.end(), 0);
    CHECK(static_cast<int>(ds.items.size()) == total);
    // Base patterns are pairwise distinct.
    for (int a = 0; a < ds.num_conds(); ++a) {
        for (int b = a + 1; b < ds.num_conds(); ++b) {
            CHECK((ds.base[static_cast<size_t>(a)] - ds.base[static_cast<size_t>(b)]).norm() > 0.0);
        }
    }
}

TEST_CASE("make_dataset validates its spec") {
    DatasetSpec spec;
    spec.dim = 16;
    CHECK_THROWS_AS(make_dataset(spec), std::invalid_argument);  // zero conditions
    spec.dup_factors = {1, 0};
    CHECK_THROWS_AS(make_dataset(spec), std::invalid_argument);  // dup < 1
    spec.dup_factors = {1};
    spec.dim = 1;
    CHECK_THROWS_AS(make_dataset(spec), std::invalid_argument);  // dim too small
}

TEST_CASE("gaussian dataset kind stays in range and is deterministic") {
    DatasetSpec spec;
    spec.dim = 10;
    spec.kind = PatternKind::gaussian;
    spec.dup_factors = {2, 2};
    spec.seed = 5;
    const ToyDataset a = make_dataset(spec);
    const ToyDataset b = make_dataset(spec);
    for (size_t i = 0; i < a.items.size(); ++i) {
        CHECK((a.items[i].x - b.items[i].x).norm() == 0.0);
        CHECK(a.items[i].x.maxCoeff() <= 1.0);
        CHECK(a.items[i].x.minCoeff() >= -1.0);
    }
}

TEST_CASE("denoise_predict is pure and shape-correct") {
    const DenoiserArch arch = mini_arch(16, 3);
    const DenoiserParams p = DenoiserParams::init(arch, test_schedule(), 17);
    Rng rng(70);
    const Vec x_t = rng.gaussian_vec(16);
    const Vec out1 = denoise_predict(p, x_t, 5, 1);
    const Vec out2 = denoise_predict(p, x_t, 5, 1);
    CHECK(out1.size() == 16);
    CHECK((out1 - out2).norm() == 0.0);

    const Vec null_out = denoise_predict(p, x_t, 5, std::nullopt);
    CHECK((null_out - out1).norm() > 0.0);

    CHECK_THROWS_AS(denoise_predict(p, x_t, 5, 3), std::out_of_range);
    CHECK_THROWS_AS(denoise_predict(p, x_t, 5, -1), std::out_of_range);
    CHECK_THROWS_AS(denoise_predict(p, rng.gaussian_vec(4), 5, 1), std::invalid_argument);
}

TEST_CASE("time features are bounded sinusoids") {
    const Vec f = time_features(813, 16);
    REQUIRE(f.size() == 16);
    for (int i = 0; i < 16; ++i) {
        CHECK(f[i] >= -1.0);
        CHECK(f[i] <= 1.0);
    }
    CHECK((time_features(813, 16) - f).norm() == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
    const DenoiserArch arch = mini_arch(6, 2);
    const DenoiserParams p = DenoiserParams::init(arch, test_schedule(), 23);
    Rng rng(71);

    int checked = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
        SampleInput in;
        in.x_t = rng.gaussian_vec(6);
        in.t = 1 + static_cast<int>(rng.below(1000));
        in.cond = rep == 0 ? std::nullopt : std::optional<int>(rep - 1);
        in.eps = rng.gaussian_vec(6);

        std::vector<double> grad;
        loss_with_gradient(p, in, grad);
        REQUIRE(grad.size() == param_count(p));

        for (int k = 0; k < 40; ++k) {
            const std::size_t idx = rng.below(grad.size());
            const double fd = finite_difference_gradient(p, in, idx, 1e-5);
            const double denom = std::max({std::abs(fd), std::abs(grad[idx]), 1e-6});
            worst = std::max(worst, std::abs(fd - grad[idx]) / denom);
            ++checked;
        }
    }
    CHECK(checked >= 100);
    CHECK(worst < 1e-4);
}

TEST_CASE("null-path gradient flows only into the null embedding") {
    const DenoiserArch arch = mini_arch(6, 2);
    const DenoiserParams p = DenoiserParams::init(arch, test_schedule(), 29);
    Rng rng(72);
    SampleInput in;
    in.x_t = rng.gaussian_vec(6);
    in.t = 11;
    in.cond = std::nullopt;
    in.eps = rng.gaussian_vec(6);
    std::vector<double> grad;
    loss_with_gradient(p, in, grad);

    // cond_embed block sits between the last bias and the null embedding.
    const std::size_t total = param_count(p);
    const std::size_t embed_count = static_cast<std::size_t>(arch.num_conds * arch.embed_dim);
    const std::size_t null_count = static_cast<std::size_t>(arch.embed_dim);
    double cond_embed_mag = 0.0;
    double null_mag = 0.0;
    for (std::size_t i = total - embed_count - null_count; i < total - null_count; ++i) {
        cond_embed_mag += std::abs(grad[i]);
    }
    for (std::size_t i = total - null_count; i < total; ++i) {
        null_mag += std::abs(grad[i]);
    }
    CHECK(cond_embed_mag == 0.0);
    CHECK(null_mag > 0.0);
}

TEST_CASE("training reduces the loss and is seed-deterministic") {
    const ToyDataset ds = make_dataset(small_spec());
    const Schedule s = Schedule::linear(1000, 1e-4, 0.02);
    const DenoiserArch arch = mini_arch(16, 2);
    TrainConfig cfg;
    cfg.epochs = 400;
    cfg.batch = 5;
    cfg.lr = 2e-3;
    cfg.seed = 31;

    const TrainResult a = train(ds, s, arch, cfg);
    REQUIRE(a.step_losses.size() == 400);  // 5 items, batch 5 -> 1 step per epoch
    const double first = std::accumulate(a.step_losses.begin(), a.step_losses.begin() + 20, 0.0) / 20.0;
    const double last = std::accumulate(a.step_losses.end() - 20, a.step_losses.end(), 0.0) / 20.0;
    CHECK(last < first);

    const TrainResult b = train(ds, s, arch, cfg);
    CHECK(params_equal(a.params, b.params));
    CHECK(a.step_losses == b.step_losses);
}

TEST_CASE("full condition dropout leaves the embedding table untouched") {
    const ToyDataset ds = make_dataset(small_spec());
    const Schedule s = Schedule::linear(1000, 1e-4, 0.02);
    const DenoiserArch arch = mini_arch(16, 2);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch = 5;
    cfg.seed = 37;
    cfg.p_drop = 1.0;

    const TrainResult result = train(ds, s, arch, cfg);
    CHECK((result.params.cond_embed - result.initial_params.cond_embed).norm() == 0.0);
    CHECK((result.params.null_embed - result.initial_params.null_embed).norm() > 0.0);
}

TEST_CASE("train validates inputs") {
    const ToyDataset ds = make_dataset(small_spec());
    const Schedule s = Schedule::linear(1000, 1e-4, 0.02);
    const DenoiserArch arch = mini_arch(16, 2);
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train(ds, s, arch, cfg), std::invalid_argument);
    cfg.epochs = 1;
    cfg.p_drop = 1.5;
    CHECK_THROWS_AS(train(ds, s, arch, cfg), std::invalid_argument);
    cfg.p_drop = 0.1;
    ToyDataset empty;
    empty.dim = 16;
    CHECK_THROWS_AS(train(empty, s, arch, cfg), std::invalid_argument);
}

TEST_CASE("params round-trip through the binary file") {
    const DenoiserArch arch = mini_arch(6, 2);
    const DenoiserParams p = DenoiserParams::init(arch, test_schedule(), 41);
    const auto path = temp_file("memlab_params_roundtrip.mlpw");
    save_params(p, path);
    const DenoiserParams loaded = load_params(path);
    CHECK(params_equal(p, loaded));
    std::filesystem::remove(path);
}

TEST_CASE("params loader rejects bad magic, version and truncation") {
    const DenoiserArch arch = mini_arch(6, 2);
    const DenoiserParams p = DenoiserParams::init(arch, test_schedule(), 43);
    const auto path = temp_file("memlab_params_corrupt.mlpw");
    save_params(p, path);

    // Truncate.
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size / 2);
    CHECK_THROWS_AS(load_params(path), std::runtime_error);

    // Bad magic.
    save_params(p, path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(load_params(path), std::runtime_error);

    // Unsupported version.
    save_params(p, path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const char version9[4] = {9, 0, 0, 0};
        f.write(version9, 4);
    }
    CHECK_THROWS_AS(load_params(path), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_SUITE_END();
