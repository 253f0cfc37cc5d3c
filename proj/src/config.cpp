// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "memlab/rng.hpp"

namespace memlab {

namespace {

std::string trim(std::string_view sv) {
    const auto begin = sv.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) {
        return {};
    }
    const auto end = sv.find_last_not_of(" \t\r");
    return std::string(sv.substr(begin, end - begin + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) {
        parts.push_back(trim(part));
    }
    return parts;
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for " + key + ": '" + value + "'");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad real for " + key + ": '" + value + "'");
    }
}

}  // namespace

void ExperimentConfig::finalize() {
    arch.num_conds = static_cast<int>(dataset.dup_factors.size());
    arch.dim = dataset.dim;
    if (!dataset_seed_set) {
        dataset.seed = mix_seed({seed, 0xd5ULL});
    }
    if (!train_seed_set) {
        train.seed = mix_seed({seed, 0x7eULL});
    }
    if (dataset.dup_factors.empty()) {
        throw std::invalid_argument("config: dataset.dup_factors must be nonempty");
    }
    if (n_seeds < 2) {
        throw std::invalid_argument("config: sampling.n_seeds must be >= 2");
    }
    if (g_values.empty()) {
        throw std::invalid_argument("config: sampling.g must be nonempty");
    }
    if (t_infer < 1 || t_infer > t_train) {
        throw std::invalid_argument("config: need 1 <= sampling.t_infer <= schedule.t_train");
    }
    if (mem_threshold <= -1.0 || mem_threshold >= 1.0) {
        throw std::invalid_argument("config: mem_threshold must be in (-1, 1)");
    }
    // The closed-form identities assume the deep-noise regime.
    const Schedule s = make_schedule();
    if (s.alpha_bar(t_train) >= 1e-2) {
        throw std::invalid_argument("config: schedule must reach alpha_bar(t_train) < 1e-2");
    }
}

ExperimentConfig parse_config_text(std::string_view text) {
    ExperimentConfig cfg;
    size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const size_t eol = text.find('\n', pos);
        std::string_view raw =
            eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) {
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": empty key or value");
        }

        if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
        } else if (key == "schedule.t_train") {
            cfg.t_train = static_cast<int>(parse_int(key, value));
        } else if (key == "schedule.beta_start") {
            cfg.beta_start = parse_real(key, value);
        } else if (key == "schedule.beta_end") {
            cfg.beta_end = parse_real(key, value);
        } else if (key == "dataset.dim") {
            cfg.dataset.dim = static_cast<int>(parse_int(key, value));
        } else if (key == "dataset.kind") {
            if (value == "blocks") {
                cfg.dataset.kind = PatternKind::blocks;
            } else if (value == "gaussian") {
                cfg.dataset.kind = PatternKind::gaussian;
            } else {
                throw std::invalid_argument("config: dataset.kind must be blocks|gaussian");
            }
        } else if (key == "dataset.dup_factors") {
            cfg.dataset.dup_factors.clear();
            for (const std::string& part : split_list(value)) {
                cfg.dataset.dup_factors.push_back(static_cast<int>(parse_int(key, part)));
            }
        } else if (key == "dataset.seed") {
            cfg.dataset.seed = static_cast<std::uint64_t>(parse_int(key, value));
            cfg.dataset_seed_set = true;
        } else if (key == "model.embed_dim") {
            cfg.arch.embed_dim = static_cast<int>(parse_int(key, value));
        } else if (key == "model.time_dim") {
            cfg.arch.time_dim = static_cast<int>(parse_int(key, value));
        } else if (key == "model.hidden") {
            cfg.arch.hidden = static_cast<int>(parse_int(key, value));
        } else if (key == "model.depth") {
            cfg.arch.depth = static_cast<int>(parse_int(key, value));
        } else if (key == "train.epochs") {
            cfg.train.epochs = static_cast<int>(parse_int(key, value));
        } else if (key == "train.batch") {
            cfg.train.batch = static_cast<int>(parse_int(key, value));
        } else if (key == "train.lr") {
            cfg.train.lr = parse_real(key, value);
        } else if (key == "train.momentum") {
            cfg.train.momentum = parse_real(key, value);
        } else if (key == "train.p_drop") {
            cfg.train.p_drop = parse_real(key, value);
        } else if (key == "train.seed") {
            cfg.train.seed = static_cast<std::uint64_t>(parse_int(key, value));
            cfg.train_seed_set = true;
        } else if (key == "train.optimizer") {
            if (value == "sgd") {
                cfg.train.optimizer = Optimizer::sgd;
            } else if (value == "sgd_momentum") {
                cfg.train.optimizer = Optimizer::sgd_momentum;
            } else {
                throw std::invalid_argument("config: train.optimizer must be sgd|sgd_momentum");
            }
        } else if (key == "sampling.n_seeds") {
            cfg.n_seeds = static_cast<int>(parse_int(key, value));
        } else if (key == "sampling.t_infer") {
            cfg.t_infer = static_cast<int>(parse_int(key, value));
        } else if (key == "sampling.g") {
            cfg.g_values.clear();
            for (const std::string& part : split_list(value)) {
                cfg.g_values.push_back(parse_real(key, part));
            }
        } else if (key == "sampling.sampler") {
            if (value == "ddim") {
                cfg.sampler = SamplerKind::ddim;
            } else if (value == "ddpm") {
                cfg.sampler = SamplerKind::ddpm;
            } else {
                throw std::invalid_argument("config: sampling.sampler must be ddim|ddpm");
            }
        } else if (key == "sampling.precision") {
            if (value == "f64") {
                cfg.precision = Precision::f64;
            } else if (value == "f32") {
                cfg.precision = Precision::f32;
            } else {
                throw std::invalid_argument("config: sampling.precision must be f64|f32");
            }
        } else if (key == "mem_threshold") {
            cfg.mem_threshold = parse_real(key, value);
        } else if (key == "out") {
            cfg.out_dir = value;
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("config: cannot open " + path.string());
    }
    std::stringstream buffer;
    buffer << is.rdbuf();
    return parse_config_text(buffer.str());
}

}  // namespace memlab
