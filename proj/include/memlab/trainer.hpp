// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memlab/dataset.hpp"
#include "memlab/denoiser.hpp"
#include "memlab/schedule.hpp"

namespace memlab {

enum class Optimizer {
    sgd,
    sgd_momentum,
};

struct TrainConfig {
    int epochs = 4000;
    int batch = 32;
    double lr = 2e-3;
    double momentum = 0.9;
    /// Probability of replacing the condition with the null embedding.
    double p_drop = 0.1;
    std::uint64_t seed = 1;
    Optimizer optimizer = Optimizer::sgd_momentum;
};

struct TrainResult {
    DenoiserParams params;
    /// Snapshot before the first update (same seed-derived init).
    DenoiserParams initial_params;
    /// Mean per-sample squared-l2 noise loss at every optimizer step.
    std::vector<double> step_losses;
};

/// Minimizes the noise-prediction loss by (momentum) SGD. Per sample: an
/// item is drawn from the epoch permutation, t uniform in {1..t_train},
/// eps ~ N(0, I), and the condition is dropped with probability p_drop.
/// Single-threaded and fully determined by (dataset, seed). Throws on a
/// non-finite loss.
TrainResult train(const ToyDataset& ds, const Schedule& s, const DenoiserArch& arch,
                  const TrainConfig& cfg);

/// One labelled training example, used by the gradient checks.
struct SampleInput {
    Vec x_t;
    int t = 1;
    std::optional<int> cond;
    Vec eps;
};

/// Loss and its analytic gradient for a single sample, gradient flattened
/// in param_get order.
double loss_with_gradient(const DenoiserParams& p, const SampleInput& in,
                          std::vector<double>& flat_grad);

/// Central finite difference of the same loss along one parameter.
double finite_difference_gradient(const DenoiserParams& p, const SampleInput& in, std::size_t idx,
                                  double h);

}  // namespace memlab
