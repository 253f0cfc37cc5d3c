// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "memlab/rng.hpp"
#include "memlab/sampler.hpp"

namespace memlab {

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path, const char* stage) {
    std::ofstream os(path);
    if (!os) {
        throw StageError(stage, "cannot open " + path.string() + " for writing");
    }
    return os;
}

void write_report_csv(const AnalysisResult& analysis, const std::filesystem::path& path) {
    std::ofstream os = open_out(path, "analyze");
    os << "cond,dup_factor,g,n_seeds,n_diverged,mem_score,sim_train,sim_generate,"
          "m1_excess_w0,m2_noise_suppression,m3_total_deviation,cov_trace_mid,pc1_align_early,"
          "k_first,x0_cos_first,x0_sql2_first,uncond_cos_xt,uncond_cos_diff_negx,uncond_sq_diff,"
          "cond_cos_xt,cond_cos_diff_negx,cond_sq_diff\n";
    for (const CondGAnalysis& row : analysis.rows) {
        os << row.cond_id << ',' << row.dup_factor << ',' << fmt(row.g) << ',' << row.n_seeds << ','
           << row.n_diverged << ',' << fmt(row.mem.score) << ',' << fmt(row.mem.sim_train) << ','
           << fmt(row.mem.sim_generate) << ',' << fmt(row.dev.m1) << ',' << fmt(row.dev.m2) << ','
           << fmt(row.dev.m3) << ',' << fmt(row.cov_trace_mid) << ',' << fmt(row.pc1_align_early)
           << ',' << fmt(row.k_first) << ',' << fmt(row.x0_cos_first) << ','
           << fmt(row.x0_sql2_first) << ',' << fmt(row.uncond_geom_first.cos_eps_xt) << ','
           << fmt(row.uncond_geom_first.cos_diff_negx) << ',' << fmt(row.uncond_geom_first.sq_diff)
           << ',' << fmt(row.cond_geom_first.cos_eps_xt) << ','
           << fmt(row.cond_geom_first.cos_diff_negx) << ',' << fmt(row.cond_geom_first.sq_diff)
           << '\n';
    }
}

nlohmann::json row_to_json(const CondGAnalysis& row) {
    nlohmann::json j;
    j["cond"] = row.cond_id;
    j["dup_factor"] = row.dup_factor;
    j["g"] = row.g;
    j["n_seeds"] = row.n_seeds;
    j["n_diverged"] = row.n_diverged;
    j["mem_score"] = row.mem.score;
    j["sim_train"] = row.mem.sim_train;
    j["sim_generate"] = row.mem.sim_generate;
    j["m1"] = row.dev.m1;
    j["m2"] = row.dev.m2;
    j["m3"] = row.dev.m3;
    j["cov_trace_mid"] = row.cov_trace_mid;
    j["pc1_align_early"] = row.pc1_align_early;
    j["k_first"] = row.k_first;
    j["x0_cos_first"] = row.x0_cos_first;
    j["x0_sql2_first"] = row.x0_sql2_first;
    return j;
}

void write_report_json(const AnalysisResult& analysis, const std::filesystem::path& path) {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const CondGAnalysis& row : analysis.rows) {
        j["rows"].push_back(row_to_json(row));
    }
    j["mid_checkpoint_t"] = analysis.mid_checkpoint_t;
    j["early_window"] = analysis.early_window;
    j["ref_g"] = analysis.ref_g;
    j["pearson_m1"] = analysis.pearson_m1;
    j["pearson_m2"] = analysis.pearson_m2;
    j["pearson_m3"] = analysis.pearson_m3;
    j["pearson_trace"] = analysis.pearson_trace;
    j["mean_score_by_g"] = nlohmann::json::array();
    for (const auto& [g, mean] : analysis.mean_score_by_g) {
        j["mean_score_by_g"].push_back({{"g", g}, {"mean_score", mean}});
    }
    std::ofstream os = open_out(path, "analyze");
    os << j.dump(2) << '\n';
}

void write_plot_tables(const AnalysisResult& analysis, const std::filesystem::path& dir) {
    std::ofstream x0_geom = open_out(dir / "x0_geometry.tsv", "analyze");
    x0_geom << "# cond\tg\tt\tmean_sq_l2\tmean_cos\tmean_k\tmem_score\n";

    std::ofstream scores = open_out(dir / "guidance_scores.tsv", "analyze");
    scores << "# cond\tdup_factor\tg\tmem_score\tsim_train\tsim_generate\n";

    std::ofstream pred_geom = open_out(dir / "pred_latent_geometry.tsv", "analyze");
    pred_geom << "# cond\tg\tbranch\tcos_eps_xt\tcos_diff_negx\tsq_diff\n";

    std::ofstream trace = open_out(dir / "cov_trace.tsv", "analyze");
    trace << "# cond\tg\tt\ttrace\tmem_score\n";

    std::ofstream align = open_out(dir / "pc1_alignment.tsv", "analyze");
    align << "# cond\tg\tt_from\tt_to\talignment\tdegenerate\n";

    std::ofstream decomp = open_out(dir / "decomposition_weights.tsv", "analyze");
    decomp << "# cond\tg\tbasis\tt\tw0\twT\tresidual\tsched_w0\tsched_wT\n";

    std::ofstream dev = open_out(dir / "deviation_metrics.tsv", "analyze");
    dev << "# cond\tg\tm1\tm2\tm3\tmem_score\n";

    std::ofstream flow = open_out(dir / "latent_flow.tsv", "analyze");
    flow << "# cond\tg\tseed\tt\tcoordinate\n";

    for (const CondGAnalysis& row : analysis.rows) {
        const std::string head = std::to_string(row.cond_id) + '\t' + fmt(row.g);
        scores << row.cond_id << '\t' << row.dup_factor << '\t' << fmt(row.g) << '\t'
               << fmt(row.mem.score) << '\t' << fmt(row.mem.sim_train) << '\t'
               << fmt(row.mem.sim_generate) << '\n';
        dev << head << '\t' << fmt(row.dev.m1) << '\t' << fmt(row.dev.m2) << '\t' << fmt(row.dev.m3)
            << '\t' << fmt(row.mem.score) << '\n';
        pred_geom << head << "\tuncond\t" << fmt(row.uncond_geom_first.cos_eps_xt) << '\t'
                  << fmt(row.uncond_geom_first.cos_diff_negx) << '\t'
                  << fmt(row.uncond_geom_first.sq_diff) << '\n';
        pred_geom << head << "\tcond\t" << fmt(row.cond_geom_first.cos_eps_xt) << '\t'
                  << fmt(row.cond_geom_first.cos_diff_negx) << '\t'
                  << fmt(row.cond_geom_first.sq_diff) << '\n';

        for (size_t i = 0; i + 1 < row.ts.size(); ++i) {
            if (i < row.mean_sq_l2.size()) {
                x0_geom << head << '\t' << row.ts[i] << '\t' << fmt(row.mean_sq_l2[i]) << '\t'
                        << fmt(row.mean_cos[i]) << '\t' << fmt(row.mean_k[i]) << '\t'
                        << fmt(row.mem.score) << '\n';
            }
            if (i < row.pc1_align.size()) {
                align << head << '\t' << row.ts[i] << '\t' << row.ts[i + 1] << '\t'
                      << fmt(row.pc1_align[i]) << '\t' << int(row.pc1_degenerate[i]) << '\n';
            }
        }
        for (size_t i = 0; i < row.cov_trace.size(); ++i) {
            trace << head << '\t' << row.ts[i] << '\t' << fmt(row.cov_trace[i]) << '\t'
                  << fmt(row.mem.score) << '\n';
        }
        for (const DecompositionSeries* series : {&row.mean_series_x, &row.mean_series_x0}) {
            const char* basis = series->basis_kind == BasisKind::train_x ? "train_x" : "final_x0";
            for (const DecompositionStep& step : series->steps) {
                decomp << head << '\t' << basis << '\t' << step.t << '\t' << fmt(step.w0) << '\t'
                       << fmt(step.wT) << '\t' << fmt(step.residual_norm) << '\t'
                       << fmt(step.sched_w0) << '\t' << fmt(step.sched_wT) << '\n';
            }
        }
        for (const auto& [seed, coords] : row.latent_flow) {
            for (size_t i = 0; i < coords.size(); ++i) {
                flow << head << '\t' << seed << '\t' << row.ts[i] << '\t' << fmt(coords[i]) << '\n';
            }
        }
    }
}

}  // namespace

ExperimentPaths ExperimentPaths::at(const std::filesystem::path& root) {
    ExperimentPaths p;
    p.root = root;
    p.params = root / "params.mlpw";
    p.train_log = root / "train_log.tsv";
    p.trajectories_dir = root / "trajectories";
    p.report_csv = root / "report.csv";
    p.report_json = root / "report.json";
    p.plots_dir = root / "plots";
    return p;
}

std::uint64_t trajectory_stream_seed(std::uint64_t master_seed, int cond_id, int g_index,
                                     int seed_index) {
    return mix_seed({master_seed, 0x5a3fULL, static_cast<std::uint64_t>(cond_id),
                     static_cast<std::uint64_t>(g_index), static_cast<std::uint64_t>(seed_index)});
}

TrainResult run_train_stage(const ExperimentConfig& cfg) {
    try {
        const ExperimentPaths paths = ExperimentPaths::at(cfg.out_dir);
        std::filesystem::create_directories(paths.root);
        const ToyDataset dataset = make_dataset(cfg.dataset);
        const Schedule schedule = cfg.make_schedule();
        TrainResult result = train(dataset, schedule, cfg.arch, cfg.train);
        save_params(result.params, paths.params);
        std::ofstream log = open_out(paths.train_log, "train");
        log << "# step\tloss\n";
        for (size_t i = 0; i < result.step_losses.size(); ++i) {
            log << i << '\t' << fmt(result.step_losses[i]) << '\n';
        }
        return result;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("train", e.what());
    }
}

std::vector<Trajectory> run_sample_stage(const ExperimentConfig& cfg,
                                         const DenoiserParams& params) {
    try {
        const ExperimentPaths paths = ExperimentPaths::at(cfg.out_dir);
        std::filesystem::create_directories(paths.trajectories_dir);
        const Schedule schedule = cfg.make_schedule();
        SamplingSpec spec;
        spec.grid = subsample_timesteps(cfg.t_train, cfg.t_infer);
        spec.sampler = cfg.sampler;
        spec.precision = cfg.precision;

        struct Task {
            int cond;
            int g_index;
            int seed_index;
        };
        std::vector<Task> tasks;
        const int num_conds = static_cast<int>(cfg.dataset.dup_factors.size());
        for (int cond = 0; cond < num_conds; ++cond) {
            for (int gi = 0; gi < static_cast<int>(cfg.g_values.size()); ++gi) {
                for (int si = 0; si < cfg.n_seeds; ++si) {
                    tasks.push_back({cond, gi, si});
                }
            }
        }

        std::vector<Trajectory> out(tasks.size());
        const Predictor predict = make_denoiser_predictor(params);
        const unsigned n_workers =
            std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()), 8u);
        std::vector<std::thread> workers;
        std::atomic<size_t> next{0};
        auto worker = [&]() {
            while (true) {
                const size_t i = next.fetch_add(1);
                if (i >= tasks.size()) {
                    return;
                }
                const Task& task = tasks[i];
                out[i] = sample_trajectory(
                    predict, cfg.dataset.dim, task.cond, cfg.g_values[static_cast<size_t>(task.g_index)],
                    trajectory_stream_seed(cfg.seed, task.cond, task.g_index, task.seed_index), spec,
                    schedule);
            }
        };
        for (unsigned w = 0; w < n_workers; ++w) {
            workers.emplace_back(worker);
        }
        for (std::thread& w : workers) {
            w.join();
        }

        // Single writer, fixed task order: identical bytes regardless of
        // worker interleaving.
        char name[64];
        for (size_t i = 0; i < tasks.size(); ++i) {
            std::snprintf(name, sizeof(name), "traj_c%04d_g%02d_s%04d.mltj", tasks[i].cond,
                          tasks[i].g_index, tasks[i].seed_index);
            dump_trajectory(out[i], paths.trajectories_dir / name);
        }
        return out;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("sample", e.what());
    }
}

AnalysisResult run_analyze_stage(const ExperimentConfig& cfg) {
    try {
        const ExperimentPaths paths = ExperimentPaths::at(cfg.out_dir);
        std::vector<std::filesystem::path> files;
        if (std::filesystem::is_directory(paths.trajectories_dir)) {
            for (const auto& entry : std::filesystem::directory_iterator(paths.trajectories_dir)) {
                if (entry.path().extension() == ".mltj") {
                    files.push_back(entry.path());
                }
            }
        }
        if (files.empty()) {
            throw std::runtime_error("no trajectory files under " +
                                     paths.trajectories_dir.string());
        }
        std::sort(files.begin(), files.end());
        std::vector<Trajectory> trajectories;
        trajectories.reserve(files.size());
        for (const auto& file : files) {
            trajectories.push_back(load_trajectory(file));
        }

        const ToyDataset dataset = make_dataset(cfg.dataset);
        const Schedule schedule = cfg.make_schedule();
        AnalysisResult analysis = analyze_trajectories(trajectories, dataset, schedule, cfg);

        std::filesystem::create_directories(paths.plots_dir);
        write_report_csv(analysis, paths.report_csv);
        write_report_json(analysis, paths.report_json);
        write_plot_tables(analysis, paths.plots_dir);
        return analysis;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("analyze", e.what());
    }
}

void run_report_stage(const ExperimentConfig& cfg) {
    try {
        const ExperimentPaths paths = ExperimentPaths::at(cfg.out_dir);
        std::ifstream is(paths.report_json);
        if (!is) {
            throw std::runtime_error("cannot open " + paths.report_json.string() +
                                     " (run analyze first)");
        }
        nlohmann::json j;
        is >> j;
        std::cout << "conditions x guidance rows: " << j["rows"].size() << '\n';
        for (const auto& entry : j["mean_score_by_g"]) {
            std::cout << "mean mem_score @ g=" << entry["g"] << ": " << entry["mean_score"] << '\n';
        }
        int memorized = 0;
        for (const auto& row : j["rows"]) {
            if (row["g"] == j["ref_g"] && row["mem_score"].is_number() &&
                row["mem_score"].get<double>() >= cfg.mem_threshold) {
                ++memorized;
            }
        }
        std::cout << "memorized conditions @ g=" << j["ref_g"].get<double>() << " (score >= "
                  << cfg.mem_threshold << "): " << memorized << '\n';
        std::cout << "pearson(m1, mem_score) = " << j["pearson_m1"] << '\n';
        std::cout << "pearson(m2, mem_score) = " << j["pearson_m2"] << '\n';
        std::cout << "pearson(m3, mem_score) = " << j["pearson_m3"] << '\n';
        std::cout << "pearson(cov_trace_mid, mem_score) = " << j["pearson_trace"] << '\n';
        std::cout << "mid checkpoint t = " << j["mid_checkpoint_t"]
                  << ", early window steps = " << j["early_window"] << '\n';
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("report", e.what());
    }
}

AnalysisResult run_experiment(const ExperimentConfig& cfg) {
    const TrainResult trained = run_train_stage(cfg);
    run_sample_stage(cfg, trained.params);
    AnalysisResult analysis = run_analyze_stage(cfg);
    run_report_stage(cfg);
    return analysis;
}

}  // namespace memlab
