// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "memlab/analysis.hpp"
#include "memlab/config.hpp"
#include "memlab/trainer.hpp"
#include "memlab/trajectory.hpp"

namespace memlab {

/// Stage-tagged failure; the CLI turns it into a machine-readable error
/// record. Completed artifacts stay on disk.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& message)
        : std::runtime_error(message), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct ExperimentPaths {
    std::filesystem::path root;
    std::filesystem::path params;
    std::filesystem::path train_log;
    std::filesystem::path trajectories_dir;
    std::filesystem::path report_csv;
    std::filesystem::path report_json;
    std::filesystem::path plots_dir;

    static ExperimentPaths at(const std::filesystem::path& root);
};

/// Builds the dataset, trains the denoiser, writes the params file and the
/// per-step loss log.
TrainResult run_train_stage(const ExperimentConfig& cfg);

/// Samples one trajectory per (condition, guidance, seed index) and writes
/// the trajectory files. Tasks fan out across threads; the per-trajectory
/// noise streams depend only on (master seed, cond, g index, seed index),
/// so the output is independent of scheduling.
std::vector<Trajectory> run_sample_stage(const ExperimentConfig& cfg, const DenoiserParams& params);

/// Loads the trajectory files and writes report.csv, report.json and the
/// per-figure plot tables.
AnalysisResult run_analyze_stage(const ExperimentConfig& cfg);

/// Prints the aggregate + correlation summary from report.json to stdout.
void run_report_stage(const ExperimentConfig& cfg);

/// All four stages in order.
AnalysisResult run_experiment(const ExperimentConfig& cfg);

/// Per-trajectory noise-stream seed (pure function of the coordinates).
std::uint64_t trajectory_stream_seed(std::uint64_t master_seed, int cond_id, int g_index,
                                     int seed_index);

}  // namespace memlab
