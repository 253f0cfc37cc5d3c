// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "memlab/experiment.hpp"
#include "memlab/identities.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> sampler;
    std::optional<std::string> precision;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
    auto* config = cmd->add_option("--config", opts.config_path, "experiment config file");
    if (config_required) {
        config->required();
    }
    cmd->add_option("--seed", opts.seed, "override the master seed");
    cmd->add_option("--out", opts.out_dir, "override the output directory");
    cmd->add_option("--sampler", opts.sampler, "override the sampler (ddim|ddpm)")
        ->check(CLI::IsMember({"ddim", "ddpm"}));
    cmd->add_option("--precision", opts.precision, "override sampling precision (f64|f32)")
        ->check(CLI::IsMember({"f64", "f32"}));
}

memlab::ExperimentConfig load_config(const CommonOpts& opts) {
    memlab::ExperimentConfig cfg = memlab::parse_config_file(opts.config_path);
    if (opts.seed) {
        cfg.seed = *opts.seed;
    }
    if (opts.out_dir) {
        cfg.out_dir = *opts.out_dir;
    }
    if (opts.sampler) {
        cfg.sampler =
            *opts.sampler == "ddpm" ? memlab::SamplerKind::ddpm : memlab::SamplerKind::ddim;
    }
    if (opts.precision) {
        cfg.precision =
            *opts.precision == "f32" ? memlab::Precision::f32 : memlab::Precision::f64;
    }
    cfg.finalize();
    return cfg;
}

int run_verify() {
    bool ok = true;
    for (const memlab::IdentityCheck& check : memlab::run_identity_suite()) {
        std::printf("[%s] %s: worst=%.3e bound=%.3e (%s)\n", check.pass ? "PASS" : "FAIL",
                    check.name.c_str(), check.worst, check.bound, check.detail.c_str());
        ok = ok && check.pass;
    }
    return ok ? 0 : 1;
}

void print_error(const std::string& stage, const std::string& message) {
    nlohmann::json j;
    j["error"] = message;
    j["stage"] = stage;
    std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"toy diffusion lab: train, sample, and analyze memorization dynamics"};
    app.require_subcommand(1);

    CommonOpts train_opts;
    CLI::App* cmd_train = app.add_subcommand("train", "build the dataset and train the denoiser");
    add_common(cmd_train, train_opts);

    CommonOpts sample_opts;
    CLI::App* cmd_sample =
        app.add_subcommand("sample", "sample guided trajectories with the trained denoiser");
    add_common(cmd_sample, sample_opts);

    CommonOpts analyze_opts;
    CLI::App* cmd_analyze =
        app.add_subcommand("analyze", "compute diagnostics and write report + plot data");
    add_common(cmd_analyze, analyze_opts);

    CommonOpts report_opts;
    CLI::App* cmd_report = app.add_subcommand("report", "print the aggregate + Pearson summary");
    add_common(cmd_report, report_opts);

    app.add_subcommand("verify", "run the closed-form identity suite standalone");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_train->parsed()) {
            memlab::run_train_stage(load_config(train_opts));
        } else if (cmd_sample->parsed()) {
            const memlab::ExperimentConfig cfg = load_config(sample_opts);
            const memlab::ExperimentPaths paths = memlab::ExperimentPaths::at(cfg.out_dir);
            const memlab::DenoiserParams params = memlab::load_params(paths.params);
            memlab::run_sample_stage(cfg, params);
        } else if (cmd_analyze->parsed()) {
            memlab::run_analyze_stage(load_config(analyze_opts));
        } else if (cmd_report->parsed()) {
            memlab::run_report_stage(load_config(report_opts));
        } else {
            return run_verify();
        }
    } catch (const memlab::StageError& e) {
        print_error(e.stage(), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("cli", e.what());
        return 1;
    }
    return 0;
}
