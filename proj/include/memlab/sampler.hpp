// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "memlab/denoiser.hpp"
#include "memlab/oracle.hpp"
#include "memlab/schedule.hpp"
#include "memlab/trajectory.hpp"

namespace memlab {

/// Noise-prediction source queried by the sampler; std::nullopt selects the
/// unconditional path. Must be pure so trajectories stay replayable.
using Predictor = std::function<Vec(const Vec& x_t, int t, std::optional<int> cond)>;

Predictor make_denoiser_predictor(const DenoiserParams& params);

/// Idealized memorized predictor with zero loss at every timestep:
/// conditional branch (x_t - sqrt(abar_t) x)/sqrt(1-abar_t), unconditional
/// branch x_t/sqrt(1-abar_t). Useful for end-to-end pipeline checks with
/// exactly known trajectories (at g = 1 the chain lands on x).
Predictor make_oracle_predictor(const OracleSpec& spec, const Schedule& schedule);

enum class Precision {
    f64,
    f32,
};

struct SamplingSpec {
    InferenceGrid grid;
    SamplerKind sampler = SamplerKind::ddim;
    /// f32 rounds predictions and latents to single precision after every
    /// step, mimicking low-precision inference; storage stays f64.
    Precision precision = Precision::f64;
};

/// Runs one guided reverse process from a seeded x_T ~ N(0, I).
///
/// Every grid step queries the predictor twice (null and cond), combines
/// with guidance scale g, and advances with the deterministic sampler (or
/// the stochastic one on the full step-1 chain, recording at grid points).
/// A non-finite latent flags the trajectory as diverged; remaining entries
/// are zero-filled.
Trajectory sample_trajectory(const Predictor& predict, int dim, int cond_id, double g,
                             std::uint64_t stream_seed, const SamplingSpec& spec,
                             const Schedule& schedule);

}  // namespace memlab
