// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "memlab/schedule.hpp"
#include "memlab/vec.hpp"

namespace memlab {

/// Architecture of the conditional noise predictor: a fully connected net
/// taking [x_t | sinusoidal time features | condition embedding] whose
/// output is added to x_t through a skip connection,
///
///   eps_hat = x_t + out_scale(t) * net(x_t, t, e),
///
/// with out_scale(t) = sqrt(abar_t + (1 - sqrt(1-abar_t))^2), the standard
/// deviation of the residual eps - x_t under the forward process. The skip
/// plays the role of a U-Net's input skip (the near-identity behavior at
/// high noise is structural) and the scaling keeps the regression target
/// O(1) at every timestep. tanh activations keep every derivative smooth
/// for the finite-difference checks.
struct DenoiserArch {
    int dim = 64;
    int num_conds = 1;
    int embed_dim = 16;
    int time_dim = 16;  // even
    int hidden = 256;
    int depth = 3;  // hidden layers

    int input_dim() const { return dim + time_dim + embed_dim; }
};

struct DenoiserParams {
    DenoiserArch arch;
    /// depth+1 affine layers, weights (out x in).
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Vec> biases;
    /// Learned condition-embedding table (num_conds x embed_dim) and the
    /// null embedding used when the condition is dropped.
    Eigen::MatrixXd cond_embed;
    Vec null_embed;
    /// Residual output scale per timestep (index t-1), frozen from the
    /// schedule at init.
    std::vector<double> out_scale;

    static DenoiserParams init(const DenoiserArch& arch, const Schedule& schedule,
                               std::uint64_t seed);
};

/// Sinusoidal features of the integer timestep (transformer-style ladder).
Vec time_features(int t, int time_dim);

/// Deterministic forward pass; std::nullopt selects the null embedding.
Vec denoise_predict(const DenoiserParams& p, const Vec& x_t, int t, std::optional<int> cond);

/// Flat parameter addressing, used by the optimizer and gradient checks.
/// Order: layer weights/biases in depth order, then cond_embed rows, then
/// null_embed.
std::size_t param_count(const DenoiserParams& p);
double param_get(const DenoiserParams& p, std::size_t idx);
void param_add(DenoiserParams& p, std::size_t idx, double delta);

/// Versioned binary file, magic "MLPW": header with the architecture, then
/// all tensors as f64 little-endian in flat-parameter order.
void save_params(const DenoiserParams& p, const std::filesystem::path& path);
DenoiserParams load_params(const std::filesystem::path& path);

}  // namespace memlab
