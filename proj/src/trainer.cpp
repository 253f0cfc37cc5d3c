// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/trainer.hpp"

#include <cmath>
#include <stdexcept>

#include "memlab/rng.hpp"

namespace memlab {

namespace {

struct GradBuffer {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Vec> biases;
    Eigen::MatrixXd cond_embed;
    Vec null_embed;

    explicit GradBuffer(const DenoiserParams& p) {
        for (size_t l = 0; l < p.weights.size(); ++l) {
            weights.emplace_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
            biases.emplace_back(Vec::Zero(p.biases[l].size()));
        }
        cond_embed = Eigen::MatrixXd::Zero(p.cond_embed.rows(), p.cond_embed.cols());
        null_embed = Vec::Zero(p.null_embed.size());
    }

    void zero() {
        for (auto& w : weights) {
            w.setZero();
        }
        for (auto& b : biases) {
            b.setZero();
        }
        cond_embed.setZero();
        null_embed.setZero();
    }
};

struct BatchInput {
    Eigen::MatrixXd x;                     // input_dim x B
    Eigen::MatrixXd eps;                   // dim x B
    std::vector<std::optional<int>> cond;  // per column
    std::vector<double> out_scale;         // per column, from the timestep
};

// Mean loss over the batch; gradients of the mean accumulate into g.
double batch_loss_grad(const DenoiserParams& p, const BatchInput& in, GradBuffer& g) {
    const auto batch = in.x.cols();
    const size_t layers = p.weights.size();

    std::vector<Eigen::MatrixXd> acts(layers + 1);
    acts[0] = in.x;
    for (size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd z = (p.weights[l] * acts[l]).colwise() + p.biases[l];
        acts[l + 1] = l + 1 < layers ? z.array().tanh().matrix() : std::move(z);
    }

    // Skip connection: eps_hat = x_t + out_scale * net(...).
    Eigen::MatrixXd diff(p.arch.dim, batch);
    for (Eigen::Index col = 0; col < batch; ++col) {
        diff.col(col) = in.x.col(col).head(p.arch.dim) +
                        in.out_scale[static_cast<size_t>(col)] * acts[layers].col(col) -
                        in.eps.col(col);
    }
    const double loss = diff.squaredNorm() / static_cast<double>(batch);

    Eigen::MatrixXd delta = 2.0 * diff / static_cast<double>(batch);
    for (Eigen::Index col = 0; col < batch; ++col) {
        delta.col(col) *= in.out_scale[static_cast<size_t>(col)];
    }
    for (size_t l = layers; l-- > 0;) {
        g.weights[l] += delta * acts[l].transpose();
        g.biases[l] += delta.rowwise().sum();
        if (l == 0) {
            // Only the embedding rows of the input receive gradient.
            const Eigen::MatrixXd dx = p.weights[0].transpose() * delta;
            const int offset = p.arch.dim + p.arch.time_dim;
            for (Eigen::Index col = 0; col < batch; ++col) {
                const auto emb_grad = dx.col(col).segment(offset, p.arch.embed_dim);
                if (in.cond[static_cast<size_t>(col)]) {
                    g.cond_embed.row(*in.cond[static_cast<size_t>(col)]) += emb_grad.transpose();
                } else {
                    g.null_embed += emb_grad;
                }
            }
        } else {
            const Eigen::MatrixXd da = p.weights[l].transpose() * delta;
            delta = da.array() * (1.0 - acts[l].array().square());
        }
    }
    return loss;
}

void assemble_input(const DenoiserParams& p, const Vec& x_t, int t, std::optional<int> cond,
                    Eigen::Ref<Eigen::VectorXd> out) {
    out.head(p.arch.dim) = x_t;
    out.segment(p.arch.dim, p.arch.time_dim) = time_features(t, p.arch.time_dim);
    if (cond) {
        out.tail(p.arch.embed_dim) = p.cond_embed.row(*cond).transpose();
    } else {
        out.tail(p.arch.embed_dim) = p.null_embed;
    }
}

void apply_update(Eigen::Ref<Eigen::MatrixXd> theta, Eigen::Ref<Eigen::MatrixXd> velocity,
                  const Eigen::MatrixXd& grad, const TrainConfig& cfg) {
    if (cfg.optimizer == Optimizer::sgd_momentum) {
        velocity = cfg.momentum * velocity + grad;
        theta -= cfg.lr * velocity;
    } else {
        theta -= cfg.lr * grad;
    }
}

}  // namespace

TrainResult train(const ToyDataset& ds, const Schedule& s, const DenoiserArch& arch,
                  const TrainConfig& cfg) {
    if (ds.items.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    if (ds.dim != arch.dim) {
        throw std::invalid_argument("train: dataset/architecture dimension mismatch");
    }
    if (arch.num_conds < ds.num_conds()) {
        throw std::invalid_argument("train: architecture has fewer conditions than dataset");
    }
    if (cfg.p_drop < 0.0 || cfg.p_drop > 1.0) {
        throw std::invalid_argument("train: p_drop must be in [0, 1]");
    }
    if (cfg.epochs < 1 || cfg.batch < 1 || !(cfg.lr > 0.0)) {
        throw std::invalid_argument("train: epochs, batch and lr must be positive");
    }

    TrainResult result;
    result.params = DenoiserParams::init(arch, s, mix_seed({cfg.seed, 0x1b17ULL}));
    result.initial_params = result.params;
    DenoiserParams& p = result.params;

    GradBuffer grads(p);
    GradBuffer velocity(p);

    Rng rng(mix_seed({cfg.seed, 0x5d37ULL}));
    const int t_train = s.t_train();
    const size_t n_items = ds.items.size();
    std::vector<size_t> perm(n_items);
    for (size_t i = 0; i < n_items; ++i) {
        perm[i] = i;
    }

    BatchInput batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (size_t i = n_items - 1; i > 0; --i) {
            const size_t j = rng.below(i + 1);
            std::swap(perm[i], perm[j]);
        }
        for (size_t start = 0; start < n_items; start += static_cast<size_t>(cfg.batch)) {
            const auto bsize =
                static_cast<Eigen::Index>(std::min(n_items - start, static_cast<size_t>(cfg.batch)));
            batch.x.resize(p.arch.input_dim(), bsize);
            batch.eps.resize(p.arch.dim, bsize);
            batch.cond.assign(static_cast<size_t>(bsize), std::nullopt);
            batch.out_scale.assign(static_cast<size_t>(bsize), 1.0);
            for (Eigen::Index col = 0; col < bsize; ++col) {
                const DatasetItem& item = ds.items[perm[start + static_cast<size_t>(col)]];
                const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(t_train)));
                const Vec eps = rng.gaussian_vec(p.arch.dim);
                const bool drop = rng.uniform() < cfg.p_drop;
                const std::optional<int> cond =
                    drop ? std::nullopt : std::optional<int>(item.cond_id);
                const Vec x_t = s.sqrt_alpha_bar(t) * item.x + s.sqrt_one_minus_alpha_bar(t) * eps;
                assemble_input(p, x_t, t, cond, batch.x.col(col));
                batch.eps.col(col) = eps;
                batch.cond[static_cast<size_t>(col)] = cond;
                batch.out_scale[static_cast<size_t>(col)] = p.out_scale[static_cast<size_t>(t - 1)];
            }

            grads.zero();
            const double loss = batch_loss_grad(p, batch, grads);
            if (!std::isfinite(loss)) {
                throw std::runtime_error("train: non-finite loss at step " +
                                         std::to_string(result.step_losses.size()) +
                                         " (lr too high or inputs invalid)");
            }
            result.step_losses.push_back(loss);

            for (size_t l = 0; l < p.weights.size(); ++l) {
                apply_update(p.weights[l], velocity.weights[l], grads.weights[l], cfg);
                apply_update(p.biases[l], velocity.biases[l], grads.biases[l], cfg);
            }
            apply_update(p.cond_embed, velocity.cond_embed, grads.cond_embed, cfg);
            apply_update(p.null_embed, velocity.null_embed, grads.null_embed, cfg);
        }
    }
    return result;
}

double loss_with_gradient(const DenoiserParams& p, const SampleInput& in,
                          std::vector<double>& flat_grad) {
    if (in.t < 1 || in.t > static_cast<int>(p.out_scale.size())) {
        throw std::invalid_argument("loss_with_gradient: timestep outside the schedule range");
    }
    BatchInput batch;
    batch.x.resize(p.arch.input_dim(), 1);
    batch.eps.resize(p.arch.dim, 1);
    batch.cond.assign(1, in.cond);
    batch.out_scale.assign(1, p.out_scale[static_cast<size_t>(in.t - 1)]);
    assemble_input(p, in.x_t, in.t, in.cond, batch.x.col(0));
    batch.eps.col(0) = in.eps;

    GradBuffer g(p);
    const double loss = batch_loss_grad(p, batch, g);

    flat_grad.clear();
    flat_grad.reserve(param_count(p));
    for (size_t l = 0; l < g.weights.size(); ++l) {
        for (Eigen::Index r = 0; r < g.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < g.weights[l].cols(); ++c) {
                flat_grad.push_back(g.weights[l](r, c));
            }
        }
        for (Eigen::Index i = 0; i < g.biases[l].size(); ++i) {
            flat_grad.push_back(g.biases[l][i]);
        }
    }
    for (Eigen::Index r = 0; r < g.cond_embed.rows(); ++r) {
        for (Eigen::Index c = 0; c < g.cond_embed.cols(); ++c) {
            flat_grad.push_back(g.cond_embed(r, c));
        }
    }
    for (Eigen::Index i = 0; i < g.null_embed.size(); ++i) {
        flat_grad.push_back(g.null_embed[i]);
    }
    return loss;
}

double finite_difference_gradient(const DenoiserParams& p, const SampleInput& in, std::size_t idx,
                                  double h) {
    DenoiserParams shifted = p;
    std::vector<double> unused;

    param_add(shifted, idx, h);
    const double plus = loss_with_gradient(shifted, in, unused);
    param_add(shifted, idx, -2.0 * h);
    const double minus = loss_with_gradient(shifted, in, unused);
    return (plus - minus) / (2.0 * h);
}

}  // namespace memlab
