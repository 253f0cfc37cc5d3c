// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace memlab {

Schedule Schedule::linear(int t_train, double beta_start, double beta_end) {
    if (t_train < 2) {
        throw std::invalid_argument("Schedule::linear: t_train must be >= 2");
    }
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || !(beta_start <= beta_end)) {
        throw std::invalid_argument("Schedule::linear: need 0 < beta_start <= beta_end < 1");
    }
    std::vector<double> betas(static_cast<size_t>(t_train));
    std::vector<double> alpha_bars(static_cast<size_t>(t_train));
    double running = 1.0;
    for (int i = 0; i < t_train; ++i) {
        double beta = beta_start + (beta_end - beta_start) * static_cast<double>(i) /
                                       static_cast<double>(t_train - 1);
        betas[static_cast<size_t>(i)] = beta;
        running *= 1.0 - beta;
        alpha_bars[static_cast<size_t>(i)] = running;
    }
    return Schedule(std::move(betas), std::move(alpha_bars));
}

int Schedule::check(int t) const {
    if (t < 1 || t > t_train()) {
        throw std::out_of_range("Schedule: timestep " + std::to_string(t) + " outside 1.." +
                                std::to_string(t_train()));
    }
    return t;
}

double Schedule::sqrt_alpha_bar(int t) const {
    return std::sqrt(alpha_bar(t));
}

double Schedule::sqrt_one_minus_alpha_bar(int t) const {
    return std::sqrt(1.0 - alpha_bar(t));
}

double Schedule::posterior_variance(int t) const {
    check(t);
    return (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t)) * beta(t);
}

InferenceGrid subsample_timesteps(int t_train, int t_infer) {
    if (t_infer < 1 || t_infer > t_train) {
        throw std::invalid_argument("subsample_timesteps: need 1 <= t_infer <= t_train");
    }
    const int gap = t_train / t_infer;
    InferenceGrid grid;
    grid.steps.reserve(static_cast<size_t>(t_infer));
    for (int i = 0; i < t_infer; ++i) {
        grid.steps.push_back(t_train - i * gap);
    }
    return grid;
}

}  // namespace memlab
