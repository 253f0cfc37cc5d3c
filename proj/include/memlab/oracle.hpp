// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "memlab/diffusion.hpp"
#include "memlab/schedule.hpp"
#include "memlab/vec.hpp"

namespace memlab {

/// Idealized fully-memorized denoiser for one training latent x.
///
/// At the last timestep the unconditional prediction reduces to the latent
/// itself and the conditional prediction to x_T - s*x for the scalar
/// s = sqrt(abar_T)/sqrt(1-abar_T). These closed forms act as exact ground
/// truth for the diagnostics and the guidance-overestimation identities.
struct OracleSpec {
    Vec x;
    double s = 0.0;

    /// Exact-s construction from the schedule's final alpha-bar.
    static OracleSpec exact(const Vec& x, const Schedule& sched);
};

/// Unconditional prediction at t = T: returns x_T unchanged.
Vec oracle_uncond(const Vec& x_T);

/// Conditional prediction at t = T: x_T - s*x.
Vec oracle_cond(const Vec& x_T, const OracleSpec& spec);

/// First-step clean estimate under guidance: cfg_combine of the two oracle
/// predictions pushed through predict_x0 at t = T. In exact-s mode this is
/// g*x + delta*x_T with delta = (1 - sqrt(1-abar_T))/sqrt(abar_T).
Vec guided_first_step_x0(const Vec& x_T, const OracleSpec& spec, double g, const Schedule& sched);

enum class DecompositionMode {
    /// Coefficients from substituting the recovered noise directly:
    /// (sqrt(abar_t) - sqrt(1-abar_t)*sqrt(abar_T)/sqrt(1-abar_T)) x
    ///   + (sqrt(1-abar_t)/sqrt(1-abar_T)) x_T.
    exact,
    /// abar_T ~ 0 limit: sqrt(abar_t) x + sqrt(1-abar_t) x_T.
    approximate,
};

/// Memorized-trajectory latent at timestep t in closed form.
Vec closed_form_xt(const Vec& x, const Vec& x_T, int t, const Schedule& sched,
                   DecompositionMode mode);

/// Zero-loss memorized noise prediction at an arbitrary timestep:
/// (x_t - sqrt(abar_t) x) / sqrt(1-abar_t). At t = t_train this reduces to
/// the x_T - s*x idealization up to the abar_T ~ 0 gap.
Vec memorized_eps(const Vec& x_t, const Vec& x, int t, const Schedule& sched);

/// Memorized-chain DDPM latent after the reverse transition at step t, i.e.
/// the step-(t-1) latent
///   sqrt(abar_{t-1}) x + sqrt(alpha_t)(1-abar_{t-1})/sqrt(1-abar_t) x_T
/// plus the injected noise. z_tail lists the per-transition z draws for the
/// final transitions of the chain, ending at transition t: the last entry is
/// this step's sigma_t z term, earlier entries are rescaled by the 1/sqrt(alpha)
/// factors of the transitions they pass through. Empty z_tail gives the
/// deterministic part only.
Vec ddpm_memorized_xt(const Vec& x, const Vec& x_T, int t, const Schedule& sched,
                      std::span<const Vec> z_tail);

}  // namespace memlab
