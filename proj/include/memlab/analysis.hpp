// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "memlab/config.hpp"
#include "memlab/dataset.hpp"
#include "memlab/diagnostics.hpp"
#include "memlab/trajectory.hpp"

namespace memlab {

/// Aggregated measurements for one (condition, guidance) cell of the sweep.
/// Series are means over the non-diverged seed ensemble.
struct CondGAnalysis {
    int cond_id = 0;
    double g = 1.0;
    int dup_factor = 1;
    int n_seeds = 0;
    int n_diverged = 0;

    MemScore mem;
    DeviationMetrics dev;  // train-x basis

    double cov_trace_mid = 0.0;
    double pc1_align_early = 0.0;

    // First reverse step (t = T) aggregates.
    double k_first = 0.0;
    double x0_cos_first = 0.0;
    double x0_sql2_first = 0.0;
    PredLatentGeometry uncond_geom_first;
    PredLatentGeometry cond_geom_first;

    // Per-timestep series; ts runs over the grid plus the final t = 0.
    std::vector<int> ts;
    std::vector<double> cov_trace;
    std::vector<double> mean_sq_l2;  // clean-estimate geometry per grid step
    std::vector<double> mean_cos;
    std::vector<double> mean_k;
    std::vector<double> pc1_align;  // per delta step (ts[i] -> ts[i+1])
    std::vector<std::uint8_t> pc1_degenerate;
    DecompositionSeries mean_series_x;   // ensemble-mean weights, train-x basis
    DecompositionSeries mean_series_x0;  // final-x0 basis

    /// 1-D projection of every latent onto the pooled top principal
    /// component: one coordinate series per seed.
    std::vector<std::pair<std::uint64_t, std::vector<double>>> latent_flow;
};

struct AnalysisResult {
    std::vector<CondGAnalysis> rows;  // sorted by (cond_id, g)

    /// Pinned measurement points: the grid timestep whose noise weight
    /// sqrt(1-abar_t) is nearest 0.8, and the number of leading delta
    /// steps (two fifths of the grid) averaged for the early alignment.
    int mid_checkpoint_t = 0;
    int early_window = 1;

    /// Correlations across conditions at the largest guidance scale
    /// (NaN when undefined).
    double ref_g = 0.0;
    double pearson_m1 = 0.0;
    double pearson_m2 = 0.0;
    double pearson_m3 = 0.0;
    double pearson_trace = 0.0;

    std::vector<std::pair<double, double>> mean_score_by_g;
};

AnalysisResult analyze_trajectories(const std::vector<Trajectory>& trajectories,
                                    const ToyDataset& dataset, const Schedule& schedule,
                                    const ExperimentConfig& cfg);

/// The pinned mid-denoising checkpoint: grid timestep with sqrt(1-abar_t)
/// closest to 0.8.
int mid_noise_checkpoint(const std::vector<int>& grid, const Schedule& schedule);

}  // namespace memlab
