// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "memlab/schedule.hpp"
#include "memlab/trajectory.hpp"
#include "memlab/vec.hpp"

namespace memlab {

/// Replication-detector stand-in: cosine similarity of mean-centered
/// vectors, in [-1, 1]. Throws if either vector is constant (zero norm
/// after centering).
double similarity(const Vec& a, const Vec& b);

/// Memorization score of a generated set against its paired training
/// sample: sim_train averages similarity(gen_i, train_x), sim_generate
/// averages all unordered generation pairs, score is their mean.
struct MemScore {
    double score = 0.0;
    double sim_train = 0.0;
    double sim_generate = 0.0;
};
MemScore mem_score(std::span<const Vec> generated, const Vec& train_x);

/// Squared l2 distance and uncentered cosine between a clean estimate and
/// the training sample.
struct X0Geometry {
    double sq_l2 = 0.0;
    double cos = 0.0;
};
X0Geometry x0_geometry(const Vec& x0_hat, const Vec& x);

/// Norm ratio ||x0_hat|| / ||x||; > 1 signals overestimation.
double k_ratio(const Vec& x0_hat, const Vec& x);

/// Geometry of a noise prediction against the initial latent and the
/// training sample: cos(eps, x_T), cos(eps - x_T, -x) (0 by convention when
/// eps == x_T), and ||eps - x_T||^2.
struct PredLatentGeometry {
    double cos_eps_xt = 0.0;
    double cos_diff_negx = 0.0;
    double sq_diff = 0.0;
};
PredLatentGeometry pred_latent_geometry(const Vec& eps, const Vec& x_T, const Vec& x);

/// Trace of the sample covariance (unbiased per-dimension variances summed;
/// the DxD matrix is never formed). Needs >= 2 samples.
double covariance_trace(std::span<const Vec> samples);

/// Top eigenvector of the samples' covariance by power iteration on the
/// centered data (fixed-seed start vector, relative eigen-residual 1e-8).
/// Degenerate when the centered data vanishes; the direction then falls
/// back to the shared (mean) vector.
struct PrincipalComponent {
    Vec direction;
    double eigenvalue = 0.0;
    bool degenerate = false;
};
PrincipalComponent top_principal_component(std::span<const Vec> samples);

/// |cos| between the deltas' first principal component and x. Absolute
/// value because the eigenvector sign is arbitrary. When all deltas are
/// identical the alignment of the shared delta direction is reported with
/// the degenerate flag set.
struct Pc1Alignment {
    double value = 0.0;
    bool degenerate = false;
};
Pc1Alignment pc1_alignment(std::span<const Vec> deltas, const Vec& x);

/// Least-squares weights of x_t in a two-vector basis via the 2x2 normal
/// equations. Throws when the Gram determinant falls under the scale-aware
/// bound 1e-12 * ||a||^2 ||b||^2.
struct Decomposition {
    double w0 = 0.0;
    double wT = 0.0;
    double residual_norm = 0.0;
};
Decomposition decompose(const Vec& x_t, const Vec& a, const Vec& b);

enum class BasisKind {
    train_x,
    final_x0,
};

struct DecompositionStep {
    int t = 0;
    double w0 = 0.0;
    double wT = 0.0;
    double residual_norm = 0.0;
    // Theoretical pair sqrt(abar_t), sqrt(1-abar_t).
    double sched_w0 = 0.0;
    double sched_wT = 0.0;
};

struct DecompositionSeries {
    BasisKind basis_kind = BasisKind::train_x;
    std::vector<DecompositionStep> steps;
};

/// Decomposes every stored latent of the trajectory (the grid steps plus
/// the final t = 0 latent) against {basis_first, x_T}.
DecompositionSeries decomposition_series(const Trajectory& traj, const Vec& basis_first,
                                         const Vec& x_T, const Schedule& s, BasisKind kind);

/// Timestep-aggregated deviation metrics over a seed ensemble of series
/// sharing one t-axis: m1 sums E[w0] (excess clean-sample contribution),
/// m2 sums -E[wT] (premature noise suppression), m3 = m1 + m2. The
/// schedule constants are omitted, and the t = 0 endpoint is excluded so
/// the sums run over t = T..1 like the per-step decompositions.
struct DeviationMetrics {
    double m1 = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
};
DeviationMetrics deviation_metrics(std::span<const DecompositionSeries> ensemble);

/// Sample Pearson correlation; throws on length mismatch, n < 2, or zero
/// variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace memlab
