// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace memlab {

struct IdentityCheck {
    std::string name;
    bool pass = false;
    /// Worst observed error (metric named in detail).
    double worst = 0.0;
    double bound = 0.0;
    std::string detail;
};

/// Closed-form identity suite over the default 1000-step linear schedule:
/// the two loss forms, the least-squares recovery of the schedule weights
/// on closed-form trajectories, the guided first-step amplification, and
/// the stochastic-sampler decomposition with its coefficient identity.
/// Deterministic (fixed internal seeds).
std::vector<IdentityCheck> run_identity_suite();

}  // namespace memlab
