// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "memlab/vec.hpp"

namespace memlab {

enum class PatternKind {
    /// Blocky grayscale patterns: coarse cells from {-1, -1/3, 1/3, 1}
    /// upsampled 2x. Falls back to per-entry draws when the dimension is
    /// not an even-sided square.
    blocks,
    /// Per-condition Gaussian around a random +-0.5 center, clamped to
    /// [-1, 1].
    gaussian,
};

struct DatasetSpec {
    int dim = 64;
    PatternKind kind = PatternKind::blocks;
    /// One entry per condition; entry c repeats condition c's single base
    /// sample that many times.
    std::vector<int> dup_factors;
    std::uint64_t seed = 0;
};

struct DatasetItem {
    Vec x;
    int cond_id = 0;
};

/// Training set with controlled duplication. Duplicated items are exact
/// copies of their condition's base sample.
struct ToyDataset {
    std::vector<DatasetItem> items;
    std::vector<Vec> base;  // per-condition base sample
    std::vector<int> dup_factor;
    int dim = 0;

    int num_conds() const { return static_cast<int>(base.size()); }
};

/// Deterministic given spec.seed.
ToyDataset make_dataset(const DatasetSpec& spec);

}  // namespace memlab
