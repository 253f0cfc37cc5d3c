// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/identities.hpp"

#include <algorithm>
#include <cmath>

#include "memlab/diffusion.hpp"
#include "memlab/diagnostics.hpp"
#include "memlab/oracle.hpp"
#include "memlab/rng.hpp"
#include "memlab/schedule.hpp"

namespace memlab {

namespace {

constexpr int kDim = 64;

Vec orthogonalize(const Vec& v, const Vec& against) {
    Vec out = v - against * (v.dot(against) / against.squaredNorm());
    return out;
}

IdentityCheck loss_equivalence(const Schedule& s, Rng& rng) {
    IdentityCheck check;
    check.name = "loss-equivalence";
    check.bound = 1e-9;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Vec x = rng.gaussian_vec(kDim);
        const Vec eps = rng.gaussian_vec(kDim);
        const Vec eps_hat = rng.gaussian_vec(kDim);
        const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(s.t_train())));
        const Vec x_t = forward_sample(x, t, eps, s);
        const Vec x0_hat = predict_x0(x_t, eps_hat, t, s);
        const double by_eps = training_loss(eps, eps_hat);
        const double by_x0 = loss_x0_form(x0_hat, x, t, s);
        const double rel = std::abs(by_eps - by_x0) / std::max({by_eps, by_x0, 1e-300});
        worst = std::max(worst, rel);
    }
    check.worst = worst;
    check.pass = worst <= check.bound;
    check.detail = "max relative gap between the noise-form and clean-form losses, 1000 draws";
    return check;
}

IdentityCheck decomposition_exactness(const Schedule& s, Rng& rng) {
    IdentityCheck check;
    check.name = "decomposition-exactness";
    check.bound = 1e-8;
    const InferenceGrid grid = subsample_timesteps(s.t_train(), 50);
    double worst_w = 0.0;
    double worst_res = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const Vec x = rng.gaussian_vec(kDim);
        const Vec x_T = rng.gaussian_vec(kDim);
        for (int t : grid.steps) {
            const Vec x_t = closed_form_xt(x, x_T, t, s, DecompositionMode::approximate);
            const Decomposition d = decompose(x_t, x, x_T);
            worst_w = std::max(worst_w, std::abs(d.w0 - s.sqrt_alpha_bar(t)));
            worst_w = std::max(worst_w, std::abs(d.wT - s.sqrt_one_minus_alpha_bar(t)));
            worst_res = std::max(worst_res, d.residual_norm);
        }
    }
    check.worst = worst_w;
    check.pass = worst_w <= 1e-8 && worst_res <= 1e-10;
    check.detail = "max weight error vs (sqrt(abar), sqrt(1-abar)); max residual " +
                   std::to_string(worst_res);
    return check;
}

IdentityCheck guided_amplification(const Schedule& s, Rng& rng) {
    IdentityCheck check;
    check.name = "guided-first-step-amplification";
    check.bound = 1e-10;
    double worst = 0.0;
    for (int rep = 0; rep < 8; ++rep) {
        const Vec x = rng.gaussian_vec(kDim);
        Vec x_T = orthogonalize(rng.gaussian_vec(kDim), x);
        const OracleSpec spec = OracleSpec::exact(x, s);
        for (double g : {0.5, 1.0, 2.0, 7.5}) {
            const Vec x0_hat = guided_first_step_x0(x_T, spec, g, s);
            const double coef = x0_hat.dot(x) / x.squaredNorm();
            worst = std::max(worst, std::abs(coef - g));
        }
    }
    check.worst = worst;
    check.pass = worst <= check.bound;
    check.detail = "max |x-coefficient - g| over g in {0.5, 1, 2, 7.5}, x orthogonal to x_T";
    return check;
}

IdentityCheck guided_eps_closed_form(const Schedule& s, Rng& rng) {
    IdentityCheck check;
    check.name = "guided-eps-closed-form";
    check.bound = 1e-12;
    double worst = 0.0;
    for (int rep = 0; rep < 8; ++rep) {
        const Vec x = rng.gaussian_vec(kDim);
        const Vec x_T = rng.gaussian_vec(kDim);
        const OracleSpec spec = OracleSpec::exact(x, s);
        for (double g : {0.5, 1.0, 2.0, 7.5}) {
            const GuidedPrediction guided = cfg_combine(oracle_uncond(x_T), oracle_cond(x_T, spec), g);
            const Vec expected = x_T - g * spec.s * x;
            worst = std::max(worst, (guided.eps_tilde - expected).lpNorm<Eigen::Infinity>());
        }
    }
    check.worst = worst;
    check.pass = worst <= check.bound;
    check.detail = "guided oracle prediction vs x_T - g*s*x, elementwise";
    return check;
}

IdentityCheck ddpm_decomposition(const Schedule& s, Rng& rng) {
    IdentityCheck check;
    check.name = "ddpm-decomposition";
    check.bound = 1e-9;
    const Vec x = rng.gaussian_vec(kDim);
    const Vec x_T = rng.gaussian_vec(kDim);
    const Vec zero = Vec::Zero(kDim);
    double worst_step = 0.0;
    double worst_coef = 0.0;
    for (int t = 1; t <= s.t_train(); ++t) {
        const Vec x_t = closed_form_xt(x, x_T, t, s, DecompositionMode::approximate);
        const Vec stepped = ddpm_step(x_t, x_T, t, s, zero);
        const Vec closed = ddpm_memorized_xt(x, x_T, t, s, {});
        worst_step = std::max(worst_step, (stepped - closed).lpNorm<Eigen::Infinity>());
        const double lhs = (1.0 - s.alpha_bar(t)) - s.beta(t);
        const double rhs = s.alpha(t) * (1.0 - s.alpha_bar(t - 1));
        worst_coef = std::max(worst_coef, std::abs(lhs - rhs));
    }
    check.worst = worst_step;
    check.pass = worst_step <= 1e-9 && worst_coef <= 1e-12;
    check.detail = "stochastic-step chain vs closed form (z = 0) across the schedule; coefficient "
                   "identity gap " +
                   std::to_string(worst_coef);
    return check;
}

}  // namespace

std::vector<IdentityCheck> run_identity_suite() {
    const Schedule s = Schedule::linear(1000, 1e-4, 0.02);
    Rng rng(mix_seed({0x1de47ULL}));
    std::vector<IdentityCheck> checks;
    checks.push_back(loss_equivalence(s, rng));
    checks.push_back(decomposition_exactness(s, rng));
    checks.push_back(guided_amplification(s, rng));
    checks.push_back(guided_eps_closed_form(s, rng));
    checks.push_back(ddpm_decomposition(s, rng));
    return checks;
}

}  // namespace memlab
