// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/sampler.hpp"

#include <algorithm>
#include <stdexcept>

#include "memlab/diffusion.hpp"
#include "memlab/rng.hpp"

namespace memlab {

namespace {

Vec round_to(Precision precision, Vec v) {
    if (precision == Precision::f32) {
        return v.cast<float>().cast<double>();
    }
    return v;
}

void fill_remaining(Trajectory& traj, size_t next_latent, int dim) {
    for (size_t i = next_latent; i < traj.latents.size(); ++i) {
        traj.latents[i] = Vec::Zero(dim);
    }
    for (StepPrediction& pred : traj.preds) {
        if (pred.eps_uncond.size() == 0) {
            pred.eps_uncond = Vec::Zero(dim);
            pred.eps_cond = Vec::Zero(dim);
            pred.eps_tilde = Vec::Zero(dim);
        }
    }
}

}  // namespace

Predictor make_denoiser_predictor(const DenoiserParams& params) {
    return [params](const Vec& x_t, int t, std::optional<int> cond) {
        return denoise_predict(params, x_t, t, cond);
    };
}

Predictor make_oracle_predictor(const OracleSpec& spec, const Schedule& schedule) {
    return [spec, schedule](const Vec& x_t, int t, std::optional<int> cond) {
        if (cond) {
            return memorized_eps(x_t, spec.x, t, schedule);
        }
        return Vec(x_t / schedule.sqrt_one_minus_alpha_bar(t));
    };
}

Trajectory sample_trajectory(const Predictor& predict, int dim, int cond_id, double g,
                             std::uint64_t stream_seed, const SamplingSpec& spec,
                             const Schedule& schedule) {
    const std::vector<int>& grid = spec.grid.steps;
    const int n = static_cast<int>(grid.size());
    if (n < 1 || grid[0] != schedule.t_train()) {
        throw std::invalid_argument("sample_trajectory: grid must start at t_train");
    }

    Trajectory traj;
    traj.cond_id = cond_id;
    traj.g = g;
    traj.seed = stream_seed;
    traj.sampler = spec.sampler;
    traj.ts = grid;
    traj.ts.push_back(0);
    traj.latents.resize(static_cast<size_t>(n) + 1);
    traj.preds.resize(static_cast<size_t>(n));

    Rng rng(stream_seed);
    Vec x = rng.gaussian_vec(dim);
    traj.x_T = x;
    traj.latents[0] = x;

    auto predict_guided = [&](const Vec& x_t, int t, StepPrediction& slot) {
        slot.eps_uncond = round_to(spec.precision, predict(x_t, t, std::nullopt));
        slot.eps_cond = round_to(spec.precision, predict(x_t, t, cond_id));
        slot.eps_tilde =
            round_to(spec.precision, cfg_combine(slot.eps_uncond, slot.eps_cond, g).eps_tilde);
    };

    if (spec.sampler == SamplerKind::ddim) {
        for (int i = 0; i < n; ++i) {
            const int t = grid[static_cast<size_t>(i)];
            const int t_prev = i + 1 < n ? grid[static_cast<size_t>(i + 1)] : 0;
            predict_guided(x, t, traj.preds[static_cast<size_t>(i)]);
            x = round_to(spec.precision,
                         ddim_step(x, traj.preds[static_cast<size_t>(i)].eps_tilde, t, t_prev, schedule));
            if (!all_finite(x)) {
                traj.diverged = true;
                fill_remaining(traj, static_cast<size_t>(i) + 1, dim);
                return traj;
            }
            traj.latents[static_cast<size_t>(i) + 1] = x;
        }
        return traj;
    }

    // Stochastic sampler: walk the full step-1 chain, recording latents and
    // predictions at the grid points.
    int record_idx = 1;  // next latent slot to fill; grid[record_idx] is its timestep
    StepPrediction scratch;
    for (int t = schedule.t_train(); t >= 1; --t) {
        StepPrediction* slot = nullptr;
        const auto grid_pos = std::find(grid.begin(), grid.end(), t);
        if (grid_pos != grid.end()) {
            slot = &traj.preds[static_cast<size_t>(grid_pos - grid.begin())];
        } else {
            slot = &scratch;
        }
        predict_guided(x, t, *slot);
        const Vec z = t > 1 ? rng.gaussian_vec(dim) : Vec(Vec::Zero(dim));
        x = round_to(spec.precision, ddpm_step(x, slot->eps_tilde, t, schedule, z));
        if (!all_finite(x)) {
            traj.diverged = true;
            fill_remaining(traj, static_cast<size_t>(record_idx), dim);
            return traj;
        }
        const int reached = t - 1;
        if (record_idx <= n &&
            reached == (record_idx < n ? grid[static_cast<size_t>(record_idx)] : 0)) {
            traj.latents[static_cast<size_t>(record_idx)] = x;
            ++record_idx;
        }
    }
    return traj;
}

}  // namespace memlab
