// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace memlab {

Vec forward_sample(const Vec& x, int t, const Vec& eps, const Schedule& s) {
    require_same_dim(x, eps, "forward_sample");
    return s.sqrt_alpha_bar(t) * x + s.sqrt_one_minus_alpha_bar(t) * eps;
}

Vec predict_x0(const Vec& x_t, const Vec& eps_hat, int t, const Schedule& s) {
    require_same_dim(x_t, eps_hat, "predict_x0");
    const double sab = s.sqrt_alpha_bar(t);
    if (sab == 0.0) {
        throw std::domain_error("predict_x0: alpha_bar(t) == 0, scaling not invertible");
    }
    return (x_t - s.sqrt_one_minus_alpha_bar(t) * eps_hat) / sab;
}

Vec ddim_step(const Vec& x_t, const Vec& eps_hat, int t, int t_prev, const Schedule& s) {
    if (t_prev < 0 || t_prev >= t) {
        throw std::invalid_argument("ddim_step: need t > t_prev >= 0");
    }
    const Vec x0_hat = predict_x0(x_t, eps_hat, t, s);
    return s.sqrt_alpha_bar(t_prev) * x0_hat + s.sqrt_one_minus_alpha_bar(t_prev) * eps_hat;
}

Vec ddpm_step(const Vec& x_t, const Vec& eps_hat, int t, const Schedule& s, const Vec& z) {
    if (t < 1) {
        throw std::invalid_argument("ddpm_step: need t >= 1");
    }
    require_same_dim(x_t, eps_hat, "ddpm_step");
    require_same_dim(x_t, z, "ddpm_step");
    const double mean_scale = 1.0 / std::sqrt(s.alpha(t));
    const double eps_scale = s.beta(t) / s.sqrt_one_minus_alpha_bar(t);
    const double sigma = std::sqrt(s.posterior_variance(t));
    return mean_scale * (x_t - eps_scale * eps_hat) + sigma * z;
}

GuidedPrediction cfg_combine(const Vec& eps_uncond, const Vec& eps_cond, double g) {
    require_same_dim(eps_uncond, eps_cond, "cfg_combine");
    if (!std::isfinite(g)) {
        throw std::invalid_argument("cfg_combine: non-finite guidance scale");
    }
    GuidedPrediction out;
    out.eps_uncond = eps_uncond;
    out.eps_cond = eps_cond;
    out.g = g;
    out.eps_tilde = (1.0 - g) * eps_uncond + g * eps_cond;
    return out;
}

double training_loss(const Vec& eps, const Vec& eps_hat) {
    require_same_dim(eps, eps_hat, "training_loss");
    return (eps - eps_hat).squaredNorm();
}

double loss_x0_form(const Vec& x0_hat, const Vec& x, int t, const Schedule& s) {
    require_same_dim(x0_hat, x, "loss_x0_form");
    const double somab = s.sqrt_one_minus_alpha_bar(t);
    if (somab == 0.0) {
        throw std::domain_error("loss_x0_form: alpha_bar(t) == 1");
    }
    const double w = s.sqrt_alpha_bar(t) / somab;
    return (w * (x0_hat - x)).squaredNorm();
}

}  // namespace memlab
