// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "memlab/dataset.hpp"
#include "memlab/denoiser.hpp"
#include "memlab/sampler.hpp"
#include "memlab/trainer.hpp"

namespace memlab {

/// Full experiment description. Parsed from a flat key-value text file with
/// sectioned keys, e.g.
///
///   seed = 7
///   schedule.t_train = 1000
///   dataset.dup_factors = 1, 1, 4, 64
///   sampling.g = 1.0, 7.5
///
/// '#' starts a comment; lists are comma-separated. Unknown keys are
/// rejected. Stage seeds derive from the master seed unless set explicitly.
struct ExperimentConfig {
    // schedule
    int t_train = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;

    std::uint64_t seed = 7;

    DatasetSpec dataset;
    DenoiserArch arch;
    TrainConfig train;

    // sampling sweep
    int n_seeds = 16;
    int t_infer = 50;
    std::vector<double> g_values = {1.0, 7.5};
    SamplerKind sampler = SamplerKind::ddim;
    Precision precision = Precision::f64;

    double mem_threshold = 0.75;
    std::filesystem::path out_dir = "out";

    /// True when dataset.seed / train.seed were given explicitly.
    bool dataset_seed_set = false;
    bool train_seed_set = false;

    /// Fills derived seeds and checks invariants (throws on violation).
    void finalize();

    Schedule make_schedule() const { return Schedule::linear(t_train, beta_start, beta_end); }
};

ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

}  // namespace memlab
