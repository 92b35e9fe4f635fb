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

#include "pwlgm/model.hpp"
#include "pwlgm/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace pwlgm {

using Rng = std::mt19937_64;

/// Independent stream seed for replication `index` under `masterSeed`.
std::uint64_t derive_seed(std::uint64_t masterSeed, std::uint64_t index);

/// One cell of the simulation design. Waves are unit-spaced starting at 0, so
/// knotMean and knotSD are in wave units.
struct SimCondition {
    int n = 500;
    int J = 10;
    double knotMean = 4.5;
    double knotSD = 0.3;
    double slopeDiff = -3.2;  // mu_eta1 - mu_eta2
    double explainedShare = 0.26;
    double thetaEps = 1.0;
    double delta = 0.25;  // half-width of the measurement window around each wave

    // Fixed block of the design.
    double interceptMean = 100.0;
    double interceptVar = 25.0;
    double slope1Mean = -5.0;
    double slopeVar = 1.0;
    double rho = 0.3;
    int covariates = 2;

    void validate() const;
};

bool operator==(const SimCondition& a, const SimCondition& b);

/// Population parameters of a condition. Design variances are the unexplained
/// variances Ψ; each factor's two TIC paths are equal and sized so that the
/// TICs explain `explainedShare` of that factor's total variance.
OriginalParams condition_to_params(const SimCondition& cond);

struct JointMoments {
    Vector mu;
    Matrix Sigma;
};

/// Mean (α, μX) and covariance [[BΦBᵀ+Ψ, BΦ], [(BΦ)ᵀ, Φ]] of (growth factors, TICs).
JointMoments joint_factor_tic_moments(const OriginalParams& theta);

struct FactorDraws {
    Matrix eta;  // n x 4
    Matrix X;    // n x c
};

/// n joint draws of (η_i, x_i). Zero-variance coordinates (e.g. a fixed knot)
/// are held at their mean and the remaining block is Cholesky-factorized.
FactorDraws sample_factors_tics(const OriginalParams& theta, int n, Rng& rng);

/// Individual occasions t_ij ~ U(j - delta, j + delta), j = 0..J-1.
Matrix gen_schedule(int n, int J, double delta, Rng& rng);

struct GeneratedData {
    LongitudinalDataset data;
    OriginalParams truth;
    Matrix eta;  // realized growth factors, for diagnostics
};

/// Factors and TICs, then occasions, then y_ij = trajectory + N(0, θε) noise.
GeneratedData gen_dataset(const SimCondition& cond, std::uint64_t seed);

/// The full 576-cell design: (J, knot) in {(6, 2.5), (10, 3.5), (10, 4.5),
/// (10, 5.5)} x n in {200, 500} x slope difference x knot SD x explained share x θε.
std::vector<SimCondition> design_grid();

}  // namespace pwlgm
