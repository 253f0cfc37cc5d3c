// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "memlab/schedule.hpp"
#include "memlab/vec.hpp"

namespace memlab {

/// Result of combining unconditional and conditional noise predictions
/// with guidance scale g: eps_tilde = (1-g)*eps_uncond + g*eps_cond.
struct GuidedPrediction {
    Vec eps_uncond;
    Vec eps_cond;
    double g = 1.0;
    Vec eps_tilde;
};

/// Closed-form forward noising: sqrt(abar_t) x + sqrt(1-abar_t) eps.
Vec forward_sample(const Vec& x, int t, const Vec& eps, const Schedule& s);

/// Clean-sample estimate implied by a noise prediction at timestep t:
/// (x_t - sqrt(1-abar_t) eps_hat) / sqrt(abar_t).
Vec predict_x0(const Vec& x_t, const Vec& eps_hat, int t, const Schedule& s);

/// Deterministic reverse step t -> t_prev (t_prev == 0 lands on the clean
/// estimate): sqrt(abar_prev) predict_x0 + sqrt(1-abar_prev) eps_hat.
Vec ddim_step(const Vec& x_t, const Vec& eps_hat, int t, int t_prev, const Schedule& s);

/// Stochastic reverse step t -> t-1 with fixed posterior variance. The noise
/// z is caller-supplied so trajectories stay replayable; sigma_1 == 0.
Vec ddpm_step(const Vec& x_t, const Vec& eps_hat, int t, const Schedule& s, const Vec& z);

GuidedPrediction cfg_combine(const Vec& eps_uncond, const Vec& eps_cond, double g);

/// Squared l2 distance between the true and predicted noise.
double training_loss(const Vec& eps, const Vec& eps_hat);

/// The same loss in clean-sample form:
/// || sqrt(abar_t)/sqrt(1-abar_t) (x0_hat - x) ||^2.
double loss_x0_form(const Vec& x0_hat, const Vec& x, int t, const Schedule& s);

}  // namespace memlab
