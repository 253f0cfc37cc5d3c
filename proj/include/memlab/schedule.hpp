// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace memlab {

/// Variance schedule and the alpha-bar quantities derived from it.
///
/// Timesteps are 1-based: t in {1..t_train}, with index 0 reserved for the
/// clean sample, so alpha_bar(0) == 1 by convention. Immutable after
/// construction; safe to share across threads.
class Schedule {
public:
    static Schedule linear(int t_train, double beta_start, double beta_end);

    int t_train() const { return static_cast<int>(betas_.size()); }

    double beta(int t) const { return betas_.at(check(t) - 1); }
    double alpha(int t) const { return 1.0 - beta(t); }

    /// Running product of alphas; alpha_bar(0) == 1.
    double alpha_bar(int t) const {
        if (t == 0) {
            return 1.0;
        }
        return alpha_bars_.at(check(t) - 1);
    }

    double sqrt_alpha_bar(int t) const;
    double sqrt_one_minus_alpha_bar(int t) const;

    /// Posterior variance beta-tilde of the stochastic reverse transition at t.
    /// Zero at t == 1 because alpha_bar(0) == 1.
    double posterior_variance(int t) const;

private:
    Schedule(std::vector<double> betas, std::vector<double> alpha_bars)
        : betas_(std::move(betas)), alpha_bars_(std::move(alpha_bars)) {}

    int check(int t) const;

    std::vector<double> betas_;
    std::vector<double> alpha_bars_;
};

/// Descending inference-time grid drawn from {1..t_train}.
struct InferenceGrid {
    std::vector<int> steps;

    int count() const { return static_cast<int>(steps.size()); }
};

/// Evenly spaced descending grid with steps[0] == t_train.
InferenceGrid subsample_timesteps(int t_train, int t_infer);

}  // namespace memlab
