// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include "memlab/rng.hpp"

namespace memlab {

namespace {

Vec centered(const Vec& v) {
    return v.array() - v.mean();
}

}  // namespace

double similarity(const Vec& a, const Vec& b) {
    require_same_dim(a, b, "similarity");
    const Vec ca = centered(a);
    const Vec cb = centered(b);
    const double na = ca.norm();
    const double nb = cb.norm();
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("similarity: zero vector after centering");
    }
    return ca.dot(cb) / (na * nb);
}

MemScore mem_score(std::span<const Vec> generated, const Vec& train_x) {
    const size_t n = generated.size();
    if (n < 2) {
        throw std::invalid_argument("mem_score: need at least 2 generated samples");
    }
    MemScore out;
    double sum_train = 0.0;
    for (const Vec& gen : generated) {
        sum_train += similarity(gen, train_x);
    }
    out.sim_train = sum_train / static_cast<double>(n);

    double sum_pairs = 0.0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            sum_pairs += similarity(generated[i], generated[j]);
        }
    }
    out.sim_generate = sum_pairs / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
    out.score = (out.sim_train + out.sim_generate) / 2.0;
    return out;
}

X0Geometry x0_geometry(const Vec& x0_hat, const Vec& x) {
    require_same_dim(x0_hat, x, "x0_geometry");
    if (x.norm() == 0.0) {
        throw std::invalid_argument("x0_geometry: zero reference sample");
    }
    X0Geometry out;
    out.sq_l2 = (x0_hat - x).squaredNorm();
    out.cos = cosine(x0_hat, x);
    return out;
}

double k_ratio(const Vec& x0_hat, const Vec& x) {
    require_same_dim(x0_hat, x, "k_ratio");
    const double nx = x.norm();
    if (nx == 0.0) {
        throw std::invalid_argument("k_ratio: zero reference sample");
    }
    return x0_hat.norm() / nx;
}

PredLatentGeometry pred_latent_geometry(const Vec& eps, const Vec& x_T, const Vec& x) {
    require_same_dim(eps, x_T, "pred_latent_geometry");
    require_same_dim(eps, x, "pred_latent_geometry");
    if (x_T.norm() == 0.0 || x.norm() == 0.0) {
        throw std::invalid_argument("pred_latent_geometry: zero reference vector");
    }
    PredLatentGeometry out;
    out.cos_eps_xt = cosine(eps, x_T);
    const Vec diff = eps - x_T;
    out.cos_diff_negx = cosine(diff, Vec(-x));
    out.sq_diff = diff.squaredNorm();
    return out;
}

double covariance_trace(std::span<const Vec> samples) {
    const size_t n = samples.size();
    if (n < 2) {
        throw std::invalid_argument("covariance_trace: need at least 2 samples");
    }
    const auto dim = samples[0].size();
    Vec mean = Vec::Zero(dim);
    for (const Vec& v : samples) {
        require_same_dim(v, samples[0], "covariance_trace");
        mean += v;
    }
    mean /= static_cast<double>(n);
    double trace = 0.0;
    for (const Vec& v : samples) {
        trace += (v - mean).squaredNorm();
    }
    return trace / static_cast<double>(n - 1);
}

PrincipalComponent top_principal_component(std::span<const Vec> samples) {
    const size_t n = samples.size();
    if (n < 2) {
        throw std::invalid_argument("top_principal_component: need at least 2 samples");
    }
    const auto dim = samples[0].size();
    Vec mean = Vec::Zero(dim);
    for (const Vec& v : samples) {
        require_same_dim(v, samples[0], "top_principal_component");
        mean += v;
    }
    mean /= static_cast<double>(n);

    std::vector<Vec> devs;
    devs.reserve(n);
    double scale = 0.0;
    for (const Vec& v : samples) {
        devs.emplace_back(v - mean);
        scale = std::max(scale, devs.back().norm());
    }

    PrincipalComponent out;
    if (scale <= 1e-12 * std::max(1.0, mean.norm())) {
        // All samples (numerically) identical: no covariance to analyze.
        out.degenerate = true;
        out.direction = mean.norm() > 0.0 ? Vec(mean / mean.norm()) : Vec(Vec::Zero(dim));
        out.eigenvalue = 0.0;
        return out;
    }

    const double denom = static_cast<double>(n - 1);
    auto apply_cov = [&](const Vec& v) {
        Vec acc = Vec::Zero(dim);
        for (const Vec& d : devs) {
            acc += d * (d.dot(v));
        }
        return Vec(acc / denom);
    };

    // Fixed-seed start vector keeps the iteration replayable.
    Rng rng(mix_seed({0x70633173ULL, static_cast<std::uint64_t>(dim)}));
    Vec v = rng.gaussian_vec(static_cast<int>(dim));
    v.normalize();

    double lambda = 0.0;
    const int max_iters = 5000;
    const double tol = 1e-8;
    for (int iter = 0; iter < max_iters; ++iter) {
        Vec w = apply_cov(v);
        const double norm_w = w.norm();
        if (norm_w == 0.0) {
            break;  // start vector fell in the null space; keep current v
        }
        v = w / norm_w;
        lambda = v.dot(apply_cov(v));
        const Vec residual = apply_cov(v) - lambda * v;
        if (residual.norm() <= tol * std::abs(lambda)) {
            break;
        }
    }
    out.direction = v;
    out.eigenvalue = lambda;
    return out;
}

Pc1Alignment pc1_alignment(std::span<const Vec> deltas, const Vec& x) {
    if (x.norm() == 0.0) {
        throw std::invalid_argument("pc1_alignment: zero reference sample");
    }
    const PrincipalComponent pc = top_principal_component(deltas);
    Pc1Alignment out;
    out.degenerate = pc.degenerate;
    if (pc.direction.norm() == 0.0) {
        out.value = 0.0;
        return out;
    }
    out.value = std::abs(cosine(pc.direction, x));
    return out;
}

Decomposition decompose(const Vec& x_t, const Vec& a, const Vec& b) {
    require_same_dim(x_t, a, "decompose");
    require_same_dim(x_t, b, "decompose");
    const double aa = a.squaredNorm();
    const double bb = b.squaredNorm();
    const double ab = a.dot(b);
    const double det = aa * bb - ab * ab;
    if (std::abs(det) < 1e-12 * aa * bb || det == 0.0) {
        throw std::invalid_argument("decompose: degenerate basis (near-singular Gram matrix)");
    }
    const double ax = a.dot(x_t);
    const double bx = b.dot(x_t);
    Decomposition out;
    out.w0 = (bb * ax - ab * bx) / det;
    out.wT = (aa * bx - ab * ax) / det;
    out.residual_norm = (x_t - out.w0 * a - out.wT * b).norm();
    return out;
}

DecompositionSeries decomposition_series(const Trajectory& traj, const Vec& basis_first,
                                         const Vec& x_T, const Schedule& s, BasisKind kind) {
    DecompositionSeries series;
    series.basis_kind = kind;
    series.steps.reserve(traj.latents.size());
    for (size_t i = 0; i < traj.latents.size(); ++i) {
        const int t = traj.ts.at(i);
        const Decomposition d = decompose(traj.latents[i], basis_first, x_T);
        DecompositionStep step;
        step.t = t;
        step.w0 = d.w0;
        step.wT = d.wT;
        step.residual_norm = d.residual_norm;
        step.sched_w0 = std::sqrt(s.alpha_bar(t));
        step.sched_wT = std::sqrt(1.0 - s.alpha_bar(t));
        series.steps.push_back(step);
    }
    return series;
}

DeviationMetrics deviation_metrics(std::span<const DecompositionSeries> ensemble) {
    if (ensemble.empty()) {
        throw std::invalid_argument("deviation_metrics: empty ensemble");
    }
    const size_t len = ensemble[0].steps.size();
    for (const DecompositionSeries& series : ensemble) {
        if (series.steps.size() != len) {
            throw std::invalid_argument("deviation_metrics: series lengths differ");
        }
    }
    DeviationMetrics out;
    for (size_t i = 0; i < len; ++i) {
        const int t = ensemble[0].steps[i].t;
        if (t < 1) {
            continue;  // sums run over t = T..1
        }
        double mean_w0 = 0.0;
        double mean_wT = 0.0;
        for (const DecompositionSeries& series : ensemble) {
            if (series.steps[i].t != t) {
                throw std::invalid_argument("deviation_metrics: series t-axes differ");
            }
            mean_w0 += series.steps[i].w0;
            mean_wT += series.steps[i].wT;
        }
        mean_w0 /= static_cast<double>(ensemble.size());
        mean_wT /= static_cast<double>(ensemble.size());
        out.m1 += mean_w0;
        out.m2 -= mean_wT;
    }
    out.m3 = out.m1 + out.m2;
    return out;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    const size_t n = xs.size();
    if (n != ys.size()) {
        throw std::invalid_argument("pearson: length mismatch");
    }
    if (n < 2) {
        throw std::invalid_argument("pearson: need at least 2 points");
    }
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mean_x;
        const double dy = ys[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw std::invalid_argument("pearson: zero variance");
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace memlab
