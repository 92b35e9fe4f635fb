/*
 *  Copyright 2026 The pwlgm Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#pragma once

#include "pwlgm/types.hpp"

#include <optional>

namespace pwlgm {

/// sign(0) := 0, so the fourth full-model loading at t == knot mean is the
/// average of its left and right limits.
inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// J x 4 loadings of the random-knot model: row j is
/// (1, t_j - mu_gamma, |t_j - mu_gamma|, -m2 - m2 * sign(t_j - mu_gamma)),
/// where m2 is the mean half-difference of the slopes.
Matrix build_loadings_full(const Vector& t, double knotMean, double halfDiffMean);

/// J x 3 loadings of the fixed-knot model: (1, t_j - gamma, |t_j - gamma|).
Matrix build_loadings_reduced(const Vector& t, double gamma);

struct Moments {
    Vector mu;
    Matrix Sigma;
};

/// Model-implied moments of y_i. Marginal mode integrates the covariates out
/// (mean at muX, covariate variance B'ΦB'ᵀ added); conditional mode plugs in x.
/// x is required in conditional mode.
Moments model_moments_full(const ReparamParams& params, const Vector& t,
                           LikelihoodMode mode, const std::optional<Vector>& x = std::nullopt);

Moments model_moments_reduced(const ReducedParams& params, const Vector& t,
                              LikelihoodMode mode, const std::optional<Vector>& x = std::nullopt);

/// Joint moments of (y_i, x_i) with the y-block of model_moments_*(marginal)
/// and cross-covariance Λ'B'Φ.
Moments joint_moments_full(const ReparamParams& params, const Vector& t);
Moments joint_moments_reduced(const ReducedParams& params, const Vector& t);

/// Noise-free bilinear trajectory evaluated at each t.
Vector predict_trajectory(const GrowthFactors& factors, const Vector& t);

}  // namespace pwlgm
