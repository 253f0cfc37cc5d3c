// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/denoiser.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "memlab/rng.hpp"

namespace memlab {

namespace {

constexpr char kMagic[4] = {'M', 'L', 'P', 'W'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    }
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) {
        throw std::runtime_error("params file: truncated header");
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    }
    return v;
}

void write_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    }
    os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) {
        throw std::runtime_error("params file: truncated tensor data");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

std::vector<int> layer_inputs(const DenoiserArch& arch) {
    std::vector<int> ins;
    ins.push_back(arch.input_dim());
    for (int l = 1; l <= arch.depth; ++l) {
        ins.push_back(arch.hidden);
    }
    return ins;
}

std::vector<int> layer_outputs(const DenoiserArch& arch) {
    std::vector<int> outs;
    for (int l = 0; l < arch.depth; ++l) {
        outs.push_back(arch.hidden);
    }
    outs.push_back(arch.dim);
    return outs;
}

}  // namespace

DenoiserParams DenoiserParams::init(const DenoiserArch& arch, const Schedule& schedule,
                                    std::uint64_t seed) {
    if (arch.dim < 1 || arch.num_conds < 1 || arch.embed_dim < 1 || arch.hidden < 1 ||
        arch.depth < 1 || arch.time_dim < 2 || arch.time_dim % 2 != 0) {
        throw std::invalid_argument("DenoiserParams::init: invalid architecture");
    }
    Rng rng(mix_seed({seed, 0x1417ULL}));
    DenoiserParams p;
    p.arch = arch;
    const auto ins = layer_inputs(arch);
    const auto outs = layer_outputs(arch);
    for (size_t l = 0; l < ins.size(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(ins[l]));
        Eigen::MatrixXd w(outs[l], ins[l]);
        for (int r = 0; r < w.rows(); ++r) {
            for (int c = 0; c < w.cols(); ++c) {
                w(r, c) = scale * rng.gaussian();
            }
        }
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(Vec::Zero(outs[l]));
    }
    p.cond_embed.resize(arch.num_conds, arch.embed_dim);
    for (int r = 0; r < arch.num_conds; ++r) {
        for (int c = 0; c < arch.embed_dim; ++c) {
            p.cond_embed(r, c) = 0.25 * rng.gaussian();
        }
    }
    p.null_embed.resize(arch.embed_dim);
    for (int c = 0; c < arch.embed_dim; ++c) {
        p.null_embed[c] = 0.25 * rng.gaussian();
    }
    p.out_scale.resize(static_cast<size_t>(schedule.t_train()));
    for (int t = 1; t <= schedule.t_train(); ++t) {
        const double lead = 1.0 - schedule.sqrt_one_minus_alpha_bar(t);
        p.out_scale[static_cast<size_t>(t - 1)] =
            std::sqrt(schedule.alpha_bar(t) + lead * lead);
    }
    return p;
}

Vec time_features(int t, int time_dim) {
    const int half = time_dim / 2;
    Vec out(time_dim);
    const double log_max_period = std::log(10000.0);
    for (int j = 0; j < half; ++j) {
        const double denom = half > 1 ? static_cast<double>(half - 1) : 1.0;
        const double freq = std::exp(-log_max_period * static_cast<double>(j) / denom);
        const double angle = static_cast<double>(t) * freq;
        out[2 * j] = std::sin(angle);
        out[2 * j + 1] = std::cos(angle);
    }
    return out;
}

Vec denoise_predict(const DenoiserParams& p, const Vec& x_t, int t, std::optional<int> cond) {
    const DenoiserArch& arch = p.arch;
    if (x_t.size() != arch.dim) {
        throw std::invalid_argument("denoise_predict: input dimension mismatch");
    }
    if (t < 1 || t > static_cast<int>(p.out_scale.size())) {
        throw std::invalid_argument("denoise_predict: timestep outside the schedule range");
    }
    if (cond && (*cond < 0 || *cond >= arch.num_conds)) {
        throw std::out_of_range("denoise_predict: cond_id out of range");
    }
    Vec input(arch.input_dim());
    input.head(arch.dim) = x_t;
    input.segment(arch.dim, arch.time_dim) = time_features(t, arch.time_dim);
    if (cond) {
        input.tail(arch.embed_dim) = p.cond_embed.row(*cond).transpose();
    } else {
        input.tail(arch.embed_dim) = p.null_embed;
    }
    Vec a = input;
    for (size_t l = 0; l < p.weights.size(); ++l) {
        Vec z = p.weights[l] * a + p.biases[l];
        if (l + 1 < p.weights.size()) {
            a = z.array().tanh();
        } else {
            a = std::move(z);
        }
    }
    return x_t + p.out_scale[static_cast<size_t>(t - 1)] * a;
}

std::size_t param_count(const DenoiserParams& p) {
    std::size_t n = 0;
    for (size_t l = 0; l < p.weights.size(); ++l) {
        n += static_cast<std::size_t>(p.weights[l].size()) + static_cast<std::size_t>(p.biases[l].size());
    }
    n += static_cast<std::size_t>(p.cond_embed.size());
    n += static_cast<std::size_t>(p.null_embed.size());
    return n;
}

namespace {

// Resolves a flat index to a scalar reference (row-major tensor order).
double* param_ptr(DenoiserParams& p, std::size_t idx) {
    for (size_t l = 0; l < p.weights.size(); ++l) {
        auto& w = p.weights[l];
        const std::size_t wn = static_cast<std::size_t>(w.size());
        if (idx < wn) {
            const auto cols = static_cast<std::size_t>(w.cols());
            return &w(static_cast<Eigen::Index>(idx / cols), static_cast<Eigen::Index>(idx % cols));
        }
        idx -= wn;
        auto& b = p.biases[l];
        const std::size_t bn = static_cast<std::size_t>(b.size());
        if (idx < bn) {
            return &b[static_cast<Eigen::Index>(idx)];
        }
        idx -= bn;
    }
    const std::size_t en = static_cast<std::size_t>(p.cond_embed.size());
    if (idx < en) {
        const auto cols = static_cast<std::size_t>(p.cond_embed.cols());
        return &p.cond_embed(static_cast<Eigen::Index>(idx / cols), static_cast<Eigen::Index>(idx % cols));
    }
    idx -= en;
    if (idx < static_cast<std::size_t>(p.null_embed.size())) {
        return &p.null_embed[static_cast<Eigen::Index>(idx)];
    }
    throw std::out_of_range("param index out of range");
}

}  // namespace

double param_get(const DenoiserParams& p, std::size_t idx) {
    return *param_ptr(const_cast<DenoiserParams&>(p), idx);
}

void param_add(DenoiserParams& p, std::size_t idx, double delta) {
    *param_ptr(p, idx) += delta;
}

void save_params(const DenoiserParams& p, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("save_params: cannot open " + path.string());
    }
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(p.arch.dim));
    write_u32(os, static_cast<std::uint32_t>(p.arch.num_conds));
    write_u32(os, static_cast<std::uint32_t>(p.arch.embed_dim));
    write_u32(os, static_cast<std::uint32_t>(p.arch.time_dim));
    write_u32(os, static_cast<std::uint32_t>(p.arch.hidden));
    write_u32(os, static_cast<std::uint32_t>(p.arch.depth));
    write_u32(os, static_cast<std::uint32_t>(p.out_scale.size()));
    const std::size_t n = param_count(p);
    for (std::size_t i = 0; i < n; ++i) {
        write_f64(os, param_get(p, i));
    }
    for (double scale : p.out_scale) {
        write_f64(os, scale);
    }
    if (!os) {
        throw std::runtime_error("save_params: write failed for " + path.string());
    }
}

DenoiserParams load_params(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("load_params: cannot open " + path.string());
    }
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("load_params: bad magic");
    }
    const std::uint32_t version = read_u32(is);
    if (version != kVersion) {
        throw std::runtime_error("load_params: unsupported version " + std::to_string(version));
    }
    DenoiserArch arch;
    arch.dim = static_cast<int>(read_u32(is));
    arch.num_conds = static_cast<int>(read_u32(is));
    arch.embed_dim = static_cast<int>(read_u32(is));
    arch.time_dim = static_cast<int>(read_u32(is));
    arch.hidden = static_cast<int>(read_u32(is));
    arch.depth = static_cast<int>(read_u32(is));
    const std::uint32_t t_train = read_u32(is);

    DenoiserParams p;
    p.arch = arch;
    const auto ins = layer_inputs(arch);
    const auto outs = layer_outputs(arch);
    if (arch.dim < 1 || arch.num_conds < 1 || arch.embed_dim < 1 || arch.hidden < 1 ||
        arch.depth < 1 || arch.time_dim < 2 || t_train < 1) {
        throw std::runtime_error("load_params: invalid header shape");
    }
    for (size_t l = 0; l < ins.size(); ++l) {
        p.weights.emplace_back(Eigen::MatrixXd::Zero(outs[l], ins[l]));
        p.biases.emplace_back(Vec::Zero(outs[l]));
    }
    p.cond_embed = Eigen::MatrixXd::Zero(arch.num_conds, arch.embed_dim);
    p.null_embed = Vec::Zero(arch.embed_dim);
    p.out_scale.resize(t_train);

    const std::size_t n = param_count(p);
    for (std::size_t i = 0; i < n; ++i) {
        *param_ptr(p, i) = read_f64(is);
    }
    for (double& scale : p.out_scale) {
        scale = read_f64(is);
    }
    // Must now be exactly at end of file.
    is.peek();
    if (!is.eof()) {
        throw std::runtime_error("load_params: trailing bytes after tensor data");
    }
    return p;
}

}  // namespace memlab
