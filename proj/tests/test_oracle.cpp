// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>

#include "memlab/oracle.hpp"
#include "memlab/rng.hpp"

using namespace memlab;

namespace {

const Schedule& default_schedule() {
    static const Schedule s = Schedule::linear(1000, 1e-4, 0.02);
    return s;
}

Vec orthogonal_to(const Vec& x, Rng& rng) {
    Vec v = rng.gaussian_vec(static_cast<int>(x.size()));
    v -= x * (v.dot(x) / x.squaredNorm());
    return v;
}

}  // namespace

TEST_SUITE_BEGIN("oracle");

TEST_CASE("unconditional oracle is the identity") {
    Vec x_T(2);
    x_T << 1.0, 2.0;
    const Vec out = oracle_uncond(x_T);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 2.0);
    CHECK(oracle_uncond(Vec::Zero(4)).norm() == 0.0);
}

TEST_CASE("conditional oracle subtracts the scaled training latent") {
    OracleSpec spec;
    spec.x = Vec(2);
    spec.x << 1.0, 0.0;
    spec.s = 1.0;
    const Vec out = oracle_cond(Vec::Zero(2), spec);
    CHECK(out[0] == -1.0);
    CHECK(out[1] == 0.0);

    spec.s = 0.0;
    Rng rng(30);
    const Vec x_T = rng.gaussian_vec(2);
    CHECK((oracle_cond(x_T, spec) - x_T).norm() == 0.0);
}

TEST_CASE("conditional residual aligns exactly with the negative latent") {
    const Schedule& s = default_schedule();
    Rng rng(31);
    const Vec x = rng.gaussian_vec(64);
    const Vec x_T = rng.gaussian_vec(64);
    const OracleSpec spec = OracleSpec::exact(x, s);
    const Vec diff = oracle_cond(x_T, spec) - x_T;
    const double cos = diff.dot(-x) / (diff.norm() * x.norm());
    CHECK(cos == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact-s scale matches the schedule") {
    const Schedule& s = default_schedule();
    Rng rng(32);
    const OracleSpec spec = OracleSpec::exact(rng.gaussian_vec(8), s);
    // Frozen from the extended-precision alpha-bar product.
    CHECK(spec.s == doctest::Approx(6.3529462859120945e-3).epsilon(1e-10));
}

TEST_CASE("guided first step at g = 1 stays near the training latent") {
    const Schedule& s = default_schedule();
    Rng rng(33);
    const Vec x = rng.gaussian_vec(64);
    const Vec x_T = rng.gaussian_vec(64);
    const OracleSpec spec = OracleSpec::exact(x, s);
    const Vec out = guided_first_step_x0(x_T, spec, 1.0, s);
    CHECK((out - x).norm() <= 0.0032 * x_T.norm());
}

TEST_CASE("guided first step at g = 0 keeps only the latent leak") {
    const Schedule& s = default_schedule();
    Rng rng(34);
    const Vec x = rng.gaussian_vec(64);
    const Vec x_T = rng.gaussian_vec(64);
    const OracleSpec spec = OracleSpec::exact(x, s);
    const Vec out = guided_first_step_x0(x_T, spec, 0.0, s);
    const double delta =
        (1.0 - s.sqrt_one_minus_alpha_bar(1000)) / s.sqrt_alpha_bar(1000);
    CHECK((out - delta * x_T).lpNorm<Eigen::Infinity>() < 1e-12);
    // Frozen delta value for the default schedule.
    CHECK(delta == doctest::Approx(3.1764410930471559e-3).epsilon(1e-10));
}

TEST_CASE("guided first step amplifies the training latent by exactly g") {
    const Schedule& s = default_schedule();
    Rng rng(35);
    const Vec x = rng.gaussian_vec(64);
    const Vec x_T = orthogonal_to(x, rng);
    const OracleSpec spec = OracleSpec::exact(x, s);
    for (double g : {0.5, 1.0, 2.0, 7.5}) {
        const Vec out = guided_first_step_x0(x_T, spec, g, s);
        const double coef = out.dot(x) / x.squaredNorm();
        CHECK(coef == doctest::Approx(g).epsilon(1e-12));
    }
}

TEST_CASE("guided oracle prediction collapses to x_T - g s x") {
    const Schedule& s = default_schedule();
    Rng rng(36);
    const Vec x = rng.gaussian_vec(32);
    const Vec x_T = rng.gaussian_vec(32);
    const OracleSpec spec = OracleSpec::exact(x, s);
    for (double g : {0.5, 2.0, 7.5}) {
        const Vec tilde = cfg_combine(oracle_uncond(x_T), oracle_cond(x_T, spec), g).eps_tilde;
        const Vec expected = x_T - g * spec.s * x;
        CHECK((tilde - expected).lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("closed form is self-consistent at the endpoints") {
    const Schedule& s = default_schedule();
    Rng rng(37);
    const Vec x = rng.gaussian_vec(16);
    const Vec x_T = rng.gaussian_vec(16);

    const Vec at_final = closed_form_xt(x, x_T, 1000, s, DecompositionMode::exact);
    for (int i = 0; i < 16; ++i) {
        CHECK(at_final[i] == x_T[i]);  // bitwise
    }
    const Vec at_zero_approx = closed_form_xt(x, x_T, 0, s, DecompositionMode::approximate);
    const Vec at_zero_exact = closed_form_xt(x, x_T, 0, s, DecompositionMode::exact);
    for (int i = 0; i < 16; ++i) {
        CHECK(at_zero_approx[i] == x[i]);
        CHECK(at_zero_exact[i] == x[i]);
    }
}

TEST_CASE("exact and approximate decompositions stay within the abar_T bound") {
    const Schedule& s = default_schedule();
    Rng rng(38);
    const Vec x = rng.gaussian_vec(64);
    const Vec x_T = rng.gaussian_vec(64);
    const double bound = s.sqrt_alpha_bar(1000) * (x.norm() + x_T.norm());
    const InferenceGrid grid = subsample_timesteps(1000, 50);
    for (int t : grid.steps) {
        const Vec exact = closed_form_xt(x, x_T, t, s, DecompositionMode::exact);
        const Vec approx = closed_form_xt(x, x_T, t, s, DecompositionMode::approximate);
        CHECK((exact - approx).lpNorm<Eigen::Infinity>() <= bound);
    }
}

TEST_CASE("memorized stochastic latent: terminal and coefficient identities") {
    const Schedule& s = default_schedule();
    Rng rng(39);
    const Vec x = rng.gaussian_vec(16);
    const Vec x_T = rng.gaussian_vec(16);

    const Vec at_one = ddpm_memorized_xt(x, x_T, 1, s, {});
    for (int i = 0; i < 16; ++i) {
        CHECK(at_one[i] == x[i]);  // sigma_1 = 0 and abar_0 = 1
    }
    const Vec z = rng.gaussian_vec(16);
    const std::vector<Vec> tail = {z};
    const Vec at_one_noisy = ddpm_memorized_xt(x, x_T, 1, s, tail);
    CHECK((at_one_noisy - x).norm() == 0.0);

    for (int t = 1; t <= 1000; ++t) {
        const double lhs = (1.0 - s.alpha_bar(t)) - s.beta(t);
        const double rhs = s.alpha(t) * (1.0 - s.alpha_bar(t - 1));
        CHECK(std::abs(lhs - rhs) <= 1e-12);
    }
}

TEST_CASE("memorized stochastic latent: single z term adds sigma_t z") {
    const Schedule& s = default_schedule();
    Rng rng(40);
    const Vec x = rng.gaussian_vec(16);
    const Vec x_T = rng.gaussian_vec(16);
    const Vec z = rng.gaussian_vec(16);
    const int t = 613;
    const std::vector<Vec> tail = {z};
    const Vec with_noise = ddpm_memorized_xt(x, x_T, t, s, tail);
    const Vec base = ddpm_memorized_xt(x, x_T, t, s, {});
    const Vec expected = base + std::sqrt(s.posterior_variance(t)) * z;
    CHECK((with_noise - expected).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("stochastic step from the closed form reproduces the memorized latent") {
    const Schedule& s = default_schedule();
    Rng rng(41);
    const Vec x = rng.gaussian_vec(16);
    const Vec x_T = rng.gaussian_vec(16);
    const Vec zero = Vec::Zero(16);
    for (int t : {1, 2, 50, 317, 999, 1000}) {
        const Vec x_t = closed_form_xt(x, x_T, t, s, DecompositionMode::approximate);
        const Vec stepped = ddpm_step(x_t, x_T, t, s, zero);
        const Vec closed = ddpm_memorized_xt(x, x_T, t, s, {});
        CHECK((stepped - closed).lpNorm<Eigen::Infinity>() < 1e-9);
    }
}

TEST_CASE("memorized per-timestep prediction recovers the forward noise") {
    const Schedule& s = default_schedule();
    Rng rng(42);
    const Vec x = rng.gaussian_vec(16);
    const Vec eps = rng.gaussian_vec(16);
    for (int t : {1, 500, 1000}) {
        const Vec x_t = s.sqrt_alpha_bar(t) * x + s.sqrt_one_minus_alpha_bar(t) * eps;
        const Vec recovered = memorized_eps(x_t, x, t, s);
        CHECK((recovered - eps).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_SUITE_END();
