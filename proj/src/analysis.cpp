// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "memlab/diffusion.hpp"

namespace memlab {

namespace {

constexpr double kMidNoiseTarget = 0.8;

double safe_pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    try {
        return pearson(xs, ys);
    } catch (const std::exception&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

DecompositionSeries mean_series(const std::vector<DecompositionSeries>& ensemble) {
    DecompositionSeries out;
    if (ensemble.empty()) {
        return out;
    }
    out.basis_kind = ensemble[0].basis_kind;
    out.steps = ensemble[0].steps;
    for (size_t i = 0; i < out.steps.size(); ++i) {
        double w0 = 0.0;
        double wT = 0.0;
        double res = 0.0;
        for (const DecompositionSeries& series : ensemble) {
            w0 += series.steps[i].w0;
            wT += series.steps[i].wT;
            res += series.steps[i].residual_norm;
        }
        const double n = static_cast<double>(ensemble.size());
        out.steps[i].w0 = w0 / n;
        out.steps[i].wT = wT / n;
        out.steps[i].residual_norm = res / n;
    }
    return out;
}

}  // namespace

int mid_noise_checkpoint(const std::vector<int>& grid, const Schedule& schedule) {
    int best_t = grid.front();
    double best_gap = std::numeric_limits<double>::infinity();
    for (int t : grid) {
        const double gap = std::abs(schedule.sqrt_one_minus_alpha_bar(t) - kMidNoiseTarget);
        if (gap < best_gap) {
            best_gap = gap;
            best_t = t;
        }
    }
    return best_t;
}

AnalysisResult analyze_trajectories(const std::vector<Trajectory>& trajectories,
                                    const ToyDataset& dataset, const Schedule& schedule,
                                    const ExperimentConfig& cfg) {
    if (trajectories.empty()) {
        throw std::invalid_argument("analyze_trajectories: no trajectories");
    }

    std::map<std::pair<int, double>, std::vector<const Trajectory*>> groups;
    for (const Trajectory& traj : trajectories) {
        groups[{traj.cond_id, traj.g}].push_back(&traj);
    }

    AnalysisResult result;
    const std::vector<int>& grid_ts = trajectories.front().ts;  // grid plus the final 0
    const int n_steps = static_cast<int>(grid_ts.size()) - 1;
    std::vector<int> grid(grid_ts.begin(), grid_ts.end() - 1);
    result.mid_checkpoint_t = mid_noise_checkpoint(grid, schedule);
    result.early_window = std::max(1, 2 * n_steps / 5);

    for (const auto& [key, group] : groups) {
        const auto [cond_id, g] = key;
        CondGAnalysis row;
        row.cond_id = cond_id;
        row.g = g;
        row.dup_factor = dataset.dup_factor.at(static_cast<size_t>(cond_id));
        row.ts = grid_ts;

        std::vector<const Trajectory*> usable;
        for (const Trajectory* traj : group) {
            if (traj->ts != grid_ts) {
                throw std::invalid_argument("analyze_trajectories: trajectories disagree on grid");
            }
            if (traj->diverged) {
                ++row.n_diverged;
            } else {
                usable.push_back(traj);
            }
        }
        row.n_seeds = static_cast<int>(usable.size());

        const Vec& train_x = dataset.base.at(static_cast<size_t>(cond_id));
        const auto nan = std::numeric_limits<double>::quiet_NaN();
        if (row.n_seeds < 2) {
            row.mem.score = row.mem.sim_train = row.mem.sim_generate = nan;
            row.dev.m1 = row.dev.m2 = row.dev.m3 = nan;
            row.cov_trace_mid = row.pc1_align_early = nan;
            row.k_first = row.x0_cos_first = row.x0_sql2_first = nan;
            result.rows.push_back(std::move(row));
            continue;
        }

        // Memorization score over the final samples.
        std::vector<Vec> finals;
        finals.reserve(usable.size());
        for (const Trajectory* traj : usable) {
            finals.push_back(traj->x0());
        }
        row.mem = mem_score(finals, train_x);

        // Decompositions per seed, then ensemble aggregates.
        std::vector<DecompositionSeries> series_x;
        std::vector<DecompositionSeries> series_x0;
        for (const Trajectory* traj : usable) {
            series_x.push_back(
                decomposition_series(*traj, train_x, traj->x_T, schedule, BasisKind::train_x));
            series_x0.push_back(
                decomposition_series(*traj, traj->x0(), traj->x_T, schedule, BasisKind::final_x0));
        }
        row.dev = deviation_metrics(series_x);
        row.mean_series_x = mean_series(series_x);
        row.mean_series_x0 = mean_series(series_x0);

        // Latent diversity across seeds at every stored timestep.
        row.cov_trace.resize(grid_ts.size());
        for (size_t i = 0; i < grid_ts.size(); ++i) {
            std::vector<Vec> at_t;
            at_t.reserve(usable.size());
            for (const Trajectory* traj : usable) {
                at_t.push_back(traj->latents[i]);
            }
            row.cov_trace[i] = covariance_trace(at_t);
            if (grid_ts[i] == result.mid_checkpoint_t) {
                row.cov_trace_mid = row.cov_trace[i];
            }
        }

        // Update-direction alignment per delta step.
        row.pc1_align.resize(static_cast<size_t>(n_steps));
        row.pc1_degenerate.resize(static_cast<size_t>(n_steps));
        std::vector<std::vector<Vec>> deltas_per_traj;
        deltas_per_traj.reserve(usable.size());
        for (const Trajectory* traj : usable) {
            deltas_per_traj.push_back(traj->deltas());
        }
        double early_sum = 0.0;
        for (int i = 0; i < n_steps; ++i) {
            std::vector<Vec> deltas_at_i;
            deltas_at_i.reserve(usable.size());
            for (const auto& deltas : deltas_per_traj) {
                deltas_at_i.push_back(deltas[static_cast<size_t>(i)]);
            }
            const Pc1Alignment align = pc1_alignment(deltas_at_i, train_x);
            row.pc1_align[static_cast<size_t>(i)] = align.value;
            row.pc1_degenerate[static_cast<size_t>(i)] = align.degenerate ? 1 : 0;
            if (i < result.early_window) {
                early_sum += align.value;
            }
        }
        row.pc1_align_early = early_sum / static_cast<double>(result.early_window);

        // Clean-estimate geometry along the grid.
        row.mean_sq_l2.assign(static_cast<size_t>(n_steps), 0.0);
        row.mean_cos.assign(static_cast<size_t>(n_steps), 0.0);
        row.mean_k.assign(static_cast<size_t>(n_steps), 0.0);
        for (const Trajectory* traj : usable) {
            for (int i = 0; i < n_steps; ++i) {
                const int t = grid_ts[static_cast<size_t>(i)];
                const Vec x0_hat = predict_x0(traj->latents[static_cast<size_t>(i)],
                                              traj->preds[static_cast<size_t>(i)].eps_tilde, t,
                                              schedule);
                const X0Geometry geom = x0_geometry(x0_hat, train_x);
                row.mean_sq_l2[static_cast<size_t>(i)] += geom.sq_l2;
                row.mean_cos[static_cast<size_t>(i)] += geom.cos;
                row.mean_k[static_cast<size_t>(i)] += k_ratio(x0_hat, train_x);
            }
        }
        const double n_usable = static_cast<double>(usable.size());
        for (int i = 0; i < n_steps; ++i) {
            row.mean_sq_l2[static_cast<size_t>(i)] /= n_usable;
            row.mean_cos[static_cast<size_t>(i)] /= n_usable;
            row.mean_k[static_cast<size_t>(i)] /= n_usable;
        }
        row.k_first = row.mean_k[0];
        row.x0_cos_first = row.mean_cos[0];
        row.x0_sql2_first = row.mean_sq_l2[0];

        // Prediction-vs-latent geometry at the first step.
        for (const Trajectory* traj : usable) {
            const StepPrediction& pred = traj->preds[0];
            const PredLatentGeometry gu = pred_latent_geometry(pred.eps_uncond, traj->x_T, train_x);
            const PredLatentGeometry gc = pred_latent_geometry(pred.eps_cond, traj->x_T, train_x);
            row.uncond_geom_first.cos_eps_xt += gu.cos_eps_xt / n_usable;
            row.uncond_geom_first.cos_diff_negx += gu.cos_diff_negx / n_usable;
            row.uncond_geom_first.sq_diff += gu.sq_diff / n_usable;
            row.cond_geom_first.cos_eps_xt += gc.cos_eps_xt / n_usable;
            row.cond_geom_first.cos_diff_negx += gc.cos_diff_negx / n_usable;
            row.cond_geom_first.sq_diff += gc.sq_diff / n_usable;
        }

        // 1-D latent flow: pooled principal component over every latent of
        // this cell, one projected series per seed.
        std::vector<Vec> pooled;
        pooled.reserve(usable.size() * grid_ts.size());
        for (const Trajectory* traj : usable) {
            for (const Vec& latent : traj->latents) {
                pooled.push_back(latent);
            }
        }
        const PrincipalComponent pc = top_principal_component(pooled);
        for (const Trajectory* traj : usable) {
            std::vector<double> coords;
            coords.reserve(grid_ts.size());
            for (const Vec& latent : traj->latents) {
                coords.push_back(pc.direction.size() > 0 ? pc.direction.dot(latent) : 0.0);
            }
            row.latent_flow.emplace_back(traj->seed, std::move(coords));
        }

        result.rows.push_back(std::move(row));
    }

    std::sort(result.rows.begin(), result.rows.end(), [](const auto& a, const auto& b) {
        return a.cond_id != b.cond_id ? a.cond_id < b.cond_id : a.g < b.g;
    });

    // Mean score per guidance scale.
    for (double g : cfg.g_values) {
        double sum = 0.0;
        int count = 0;
        for (const CondGAnalysis& row : result.rows) {
            if (row.g == g && std::isfinite(row.mem.score)) {
                sum += row.mem.score;
                ++count;
            }
        }
        result.mean_score_by_g.emplace_back(g, count > 0 ? sum / count
                                                         : std::numeric_limits<double>::quiet_NaN());
    }

    // Deviation-vs-severity correlations at the strongest guidance.
    result.ref_g = *std::max_element(cfg.g_values.begin(), cfg.g_values.end());
    std::vector<double> scores;
    std::vector<double> m1s;
    std::vector<double> m2s;
    std::vector<double> m3s;
    std::vector<double> traces;
    for (const CondGAnalysis& row : result.rows) {
        if (row.g == result.ref_g && std::isfinite(row.mem.score)) {
            scores.push_back(row.mem.score);
            m1s.push_back(row.dev.m1);
            m2s.push_back(row.dev.m2);
            m3s.push_back(row.dev.m3);
            traces.push_back(row.cov_trace_mid);
        }
    }
    result.pearson_m1 = safe_pearson(m1s, scores);
    result.pearson_m2 = safe_pearson(m2s, scores);
    result.pearson_m3 = safe_pearson(m3s, scores);
    result.pearson_trace = safe_pearson(traces, scores);
    return result;
}

}  // namespace memlab
