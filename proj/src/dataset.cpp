// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#include "memlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "memlab/rng.hpp"

namespace memlab {

namespace {

constexpr double kBlockLevels[4] = {-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0};

Vec blocks_pattern(int dim, Rng& rng) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
    Vec x(dim);
    if (side * side == dim && side % 2 == 0) {
        const int coarse = side / 2;
        std::vector<double> cells(static_cast<size_t>(coarse * coarse));
        for (double& cell : cells) {
            cell = kBlockLevels[rng.below(4)];
        }
        for (int r = 0; r < side; ++r) {
            for (int c = 0; c < side; ++c) {
                x[r * side + c] = cells[static_cast<size_t>((r / 2) * coarse + (c / 2))];
            }
        }
    } else {
        for (int i = 0; i < dim; ++i) {
            x[i] = kBlockLevels[rng.below(4)];
        }
    }
    return x;
}

Vec gaussian_pattern(int dim, Rng& rng) {
    Vec x(dim);
    for (int i = 0; i < dim; ++i) {
        const double center = rng.uniform() < 0.5 ? -0.5 : 0.5;
        x[i] = std::clamp(center + 0.35 * rng.gaussian(), -1.0, 1.0);
    }
    return x;
}

}  // namespace

ToyDataset make_dataset(const DatasetSpec& spec) {
    if (spec.dup_factors.empty()) {
        throw std::invalid_argument("make_dataset: zero conditions");
    }
    if (spec.dim < 2) {
        throw std::invalid_argument("make_dataset: dim must be >= 2");
    }
    for (int dup : spec.dup_factors) {
        if (dup < 1) {
            throw std::invalid_argument("make_dataset: dup_factor must be >= 1");
        }
    }

    Rng rng(mix_seed({spec.seed, 0xda7a5e7ULL}));
    ToyDataset ds;
    ds.dim = spec.dim;
    ds.dup_factor = spec.dup_factors;
    ds.base.reserve(spec.dup_factors.size());
    for (size_t c = 0; c < spec.dup_factors.size(); ++c) {
        Vec x = spec.kind == PatternKind::blocks ? blocks_pattern(spec.dim, rng)
                                                 : gaussian_pattern(spec.dim, rng);
        ds.base.push_back(std::move(x));
    }
    for (size_t c = 0; c < spec.dup_factors.size(); ++c) {
        for (int k = 0; k < spec.dup_factors[c]; ++k) {
            ds.items.push_back({ds.base[c], static_cast<int>(c)});
        }
    }
    return ds;
}

}  // namespace memlab
