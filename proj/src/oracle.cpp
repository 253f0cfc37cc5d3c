// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace memlab {

OracleSpec OracleSpec::exact(const Vec& x, const Schedule& sched) {
    OracleSpec spec;
    spec.x = x;
    const int t_final = sched.t_train();
    spec.s = sched.sqrt_alpha_bar(t_final) / sched.sqrt_one_minus_alpha_bar(t_final);
    return spec;
}

Vec oracle_uncond(const Vec& x_T) {
    return x_T;
}

Vec oracle_cond(const Vec& x_T, const OracleSpec& spec) {
    require_same_dim(x_T, spec.x, "oracle_cond");
    return x_T - spec.s * spec.x;
}

Vec guided_first_step_x0(const Vec& x_T, const OracleSpec& spec, double g, const Schedule& sched) {
    const GuidedPrediction guided = cfg_combine(oracle_uncond(x_T), oracle_cond(x_T, spec), g);
    return predict_x0(x_T, guided.eps_tilde, sched.t_train(), sched);
}

Vec closed_form_xt(const Vec& x, const Vec& x_T, int t, const Schedule& sched,
                   DecompositionMode mode) {
    require_same_dim(x, x_T, "closed_form_xt");
    const double w_noise_now = std::sqrt(1.0 - sched.alpha_bar(t));
    const double w_clean_now = std::sqrt(sched.alpha_bar(t));
    if (mode == DecompositionMode::approximate) {
        return w_clean_now * x + w_noise_now * x_T;
    }
    const int t_final = sched.t_train();
    const double w_noise_final = sched.sqrt_one_minus_alpha_bar(t_final);
    const double w_clean_final = sched.sqrt_alpha_bar(t_final);
    // Single-division form so the x coefficient cancels exactly at t = t_final.
    const double x_coef = (w_clean_now * w_noise_final - w_noise_now * w_clean_final) / w_noise_final;
    return x_coef * x + (w_noise_now / w_noise_final) * x_T;
}

Vec memorized_eps(const Vec& x_t, const Vec& x, int t, const Schedule& sched) {
    require_same_dim(x_t, x, "memorized_eps");
    return (x_t - sched.sqrt_alpha_bar(t) * x) / sched.sqrt_one_minus_alpha_bar(t);
}

Vec ddpm_memorized_xt(const Vec& x, const Vec& x_T, int t, const Schedule& sched,
                      std::span<const Vec> z_tail) {
    require_same_dim(x, x_T, "ddpm_memorized_xt");
    if (t < 1 || t > sched.t_train()) {
        throw std::invalid_argument("ddpm_memorized_xt: transition index out of range");
    }
    const double w_clean = sched.sqrt_alpha_bar(t - 1);
    const double w_noise =
        std::sqrt(sched.alpha(t)) * (1.0 - sched.alpha_bar(t - 1)) / sched.sqrt_one_minus_alpha_bar(t);
    Vec out = w_clean * x + w_noise * x_T;
    // z_tail.back() belongs to transition t; entry k to transition
    // t + (n-1-k). A draw injected at transition r is divided by
    // sqrt(alpha_q) for every later transition q = r-1 .. t.
    const int n = static_cast<int>(z_tail.size());
    for (int k = 0; k < n; ++k) {
        const int r = t + (n - 1 - k);
        if (r > sched.t_train()) {
            throw std::invalid_argument("ddpm_memorized_xt: z_tail longer than the chain");
        }
        require_same_dim(x, z_tail[static_cast<size_t>(k)], "ddpm_memorized_xt");
        double scale = std::sqrt(sched.posterior_variance(r));
        for (int q = r - 1; q >= t; --q) {
            scale /= std::sqrt(sched.alpha(q));
        }
        out += scale * z_tail[static_cast<size_t>(k)];
    }
    return out;
}

}  // namespace memlab
