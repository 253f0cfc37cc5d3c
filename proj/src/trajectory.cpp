// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/trajectory.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace memlab {

namespace {

constexpr char kMagic[4] = {'M', 'L', 'T', 'J'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : os_(path, std::ios::binary) {
        if (!os_) {
            throw std::runtime_error("dump_trajectory: cannot open " + path.string());
        }
    }

    void bytes(const void* data, std::size_t n) {
        os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    }
    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) {
            b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
        }
        bytes(b, 4);
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) {
            b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
        }
        bytes(b, 8);
    }
    void f64(double d) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        u64(bits);
    }
    void vec(const Vec& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            f64(v[i]);
        }
    }
    bool good() const { return static_cast<bool>(os_); }

private:
    std::ofstream os_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : is_(path, std::ios::binary) {
        if (!is_) {
            throw std::runtime_error("load_trajectory: cannot open " + path.string());
        }
    }

    void bytes(void* out, std::size_t n) {
        is_.read(static_cast<char*>(out), static_cast<std::streamsize>(n));
        if (!is_) {
            throw std::runtime_error("load_trajectory: truncated file at byte offset " +
                                     std::to_string(offset_));
        }
        offset_ += n;
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        }
        return v;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        }
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    Vec vec(int dim) {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) {
            v[i] = f64();
        }
        return v;
    }
    bool at_eof() {
        is_.peek();
        return is_.eof();
    }

private:
    std::ifstream is_;
    std::size_t offset_ = 0;
};

}  // namespace

std::vector<Vec> Trajectory::deltas() const {
    std::vector<Vec> out;
    out.reserve(latents.size() - 1);
    for (size_t i = 0; i + 1 < latents.size(); ++i) {
        out.emplace_back(latents[i + 1] - latents[i]);
    }
    return out;
}

std::size_t trajectory_file_size(int dim, int grid_len) {
    const std::size_t header = 4 + 4 + 4 + 4 + 4ULL * static_cast<std::size_t>(grid_len) + 8 + 4 + 8 + 1 + 1;
    const std::size_t vectors = static_cast<std::size_t>(dim) * 8ULL *
                                (1 + static_cast<std::size_t>(grid_len) * 4ULL);
    return header + vectors;
}

void dump_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
    const int n = traj.num_steps();
    if (traj.latents.size() != static_cast<size_t>(n) + 1 ||
        traj.ts.size() != static_cast<size_t>(n) + 1) {
        throw std::invalid_argument("dump_trajectory: inconsistent trajectory shape");
    }
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(traj.dim()));
    w.u32(static_cast<std::uint32_t>(n));
    for (int i = 0; i < n; ++i) {
        w.u32(static_cast<std::uint32_t>(traj.ts[static_cast<size_t>(i)]));
    }
    w.u64(traj.seed);
    w.u32(static_cast<std::uint32_t>(traj.cond_id));
    w.f64(traj.g);
    const std::uint8_t sampler = static_cast<std::uint8_t>(traj.sampler);
    w.bytes(&sampler, 1);
    const std::uint8_t diverged = traj.diverged ? 1 : 0;
    w.bytes(&diverged, 1);

    w.vec(traj.x_T);
    for (int i = 1; i <= n; ++i) {
        w.vec(traj.latents[static_cast<size_t>(i)]);
    }
    for (const StepPrediction& pred : traj.preds) {
        w.vec(pred.eps_uncond);
        w.vec(pred.eps_cond);
        w.vec(pred.eps_tilde);
    }
    if (!w.good()) {
        throw std::runtime_error("dump_trajectory: write failed for " + path.string());
    }
}

Trajectory load_trajectory(const std::filesystem::path& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("load_trajectory: bad magic in " + path.string());
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw std::runtime_error("load_trajectory: unsupported version " + std::to_string(version));
    }
    const int dim = static_cast<int>(r.u32());
    const int n = static_cast<int>(r.u32());
    if (dim < 1 || n < 1) {
        throw std::runtime_error("load_trajectory: invalid header shape");
    }

    Trajectory traj;
    traj.ts.resize(static_cast<size_t>(n) + 1);
    for (int i = 0; i < n; ++i) {
        traj.ts[static_cast<size_t>(i)] = static_cast<int>(r.u32());
    }
    traj.ts[static_cast<size_t>(n)] = 0;
    traj.seed = r.u64();
    traj.cond_id = static_cast<int>(r.u32());
    traj.g = r.f64();
    std::uint8_t sampler = 0;
    r.bytes(&sampler, 1);
    traj.sampler = static_cast<SamplerKind>(sampler);
    std::uint8_t diverged = 0;
    r.bytes(&diverged, 1);
    traj.diverged = diverged != 0;

    traj.x_T = r.vec(dim);
    traj.latents.resize(static_cast<size_t>(n) + 1);
    traj.latents[0] = traj.x_T;
    for (int i = 1; i <= n; ++i) {
        traj.latents[static_cast<size_t>(i)] = r.vec(dim);
    }
    traj.preds.resize(static_cast<size_t>(n));
    for (StepPrediction& pred : traj.preds) {
        pred.eps_uncond = r.vec(dim);
        pred.eps_cond = r.vec(dim);
        pred.eps_tilde = r.vec(dim);
    }
    if (!r.at_eof()) {
        throw std::runtime_error("load_trajectory: trailing bytes in " + path.string());
    }
    return traj;
}

}  // namespace memlab
