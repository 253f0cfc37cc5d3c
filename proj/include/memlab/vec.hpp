// Copyright (C) 2026 The memlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace memlab {

/// Flat real-valued latent / data point. All latent-space math runs in f64.
using Vec = Eigen::VectorXd;

inline void require_same_dim(const Vec& a, const Vec& b, const char* where) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

inline bool all_finite(const Vec& v) {
    return v.allFinite();
}

/// Uncentered cosine similarity. By convention returns 0 when `a` has zero
/// magnitude; throws if the reference vector `b` is zero.
inline double cosine(const Vec& a, const Vec& b) {
    require_same_dim(a, b, "cosine");
    double nb = b.norm();
    if (nb == 0.0) {
        throw std::invalid_argument("cosine: zero reference vector");
    }
    double na = a.norm();
    if (na == 0.0) {
        return 0.0;
    }
    return a.dot(b) / (na * nb);
}

}  // namespace memlab
