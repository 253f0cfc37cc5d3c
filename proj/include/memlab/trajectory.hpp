// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "memlab/vec.hpp"

namespace memlab {

enum class SamplerKind : std::uint8_t {
    ddim = 0,
    ddpm = 1,
};

/// Noise predictions recorded at one reverse step.
struct StepPrediction {
    Vec eps_uncond;
    Vec eps_cond;
    Vec eps_tilde;
};

/// One full denoising run for a (condition, guidance, seed) triple.
///
/// latents[i] is the latent at timestep ts[i]; ts runs over the descending
/// inference grid and ends with the clean sample at t = 0, so
/// latents.front() == x_T and latents.back() == x_0. preds[i] holds the
/// predictions queried at ts[i] (one triple per reverse step).
struct Trajectory {
    Vec x_T;
    std::vector<int> ts;
    std::vector<Vec> latents;
    std::vector<StepPrediction> preds;
    int cond_id = 0;
    double g = 1.0;
    std::uint64_t seed = 0;
    SamplerKind sampler = SamplerKind::ddim;
    bool diverged = false;

    int dim() const { return static_cast<int>(x_T.size()); }
    int num_steps() const { return static_cast<int>(preds.size()); }
    const Vec& x0() const { return latents.back(); }

    /// Per-step update vectors x_{t-1} - x_t, in denoising order.
    std::vector<Vec> deltas() const;
};

/// Binary container, format "MLTJ" v1: header (magic, version, dim, grid,
/// seed, cond, g, sampler, diverged flag) followed by f64 little-endian
/// arrays for x_T, the post-step latents, and each prediction triple.
void dump_trajectory(const Trajectory& traj, const std::filesystem::path& path);
Trajectory load_trajectory(const std::filesystem::path& path);

/// Byte size the v1 format implies for the given shape.
std::size_t trajectory_file_size(int dim, int grid_len);

}  // namespace memlab
