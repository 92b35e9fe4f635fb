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

#include "pwlgm/likelihood.hpp"
#include "pwlgm/types.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace pwlgm {

struct FitOptions {
    LikelihoodMode mode = LikelihoodMode::Marginal;
    int maxAttempts = 10;
    double gradTol = 1e-6;
    double relFTol = 1e-10;
    int maxIter = 2000;
    double ciLevel = 0.95;
    std::uint64_t seed = 0;  // keys the jitter stream of retries

    void validate() const;
};

struct ParamEstimate {
    std::string name;
    double estimate = 0.0;
    double se = std::numeric_limits<double>::quiet_NaN();
    double ciLow = std::numeric_limits<double>::quiet_NaN();
    double ciHigh = std::numeric_limits<double>::quiet_NaN();
};

enum class ImproperKind { NegativeVariance, OutOfRangeCorrelation };

struct ImproperFlag {
    ImproperKind kind = ImproperKind::NegativeVariance;
    std::string first;   // growth factor, e.g. "knot"
    std::string second;  // partner factor for correlations, empty otherwise

    std::string label() const;
    bool operator==(const ImproperFlag&) const = default;
};

using ImproperFlags = std::vector<ImproperFlag>;

using EstimableParams = std::variant<ReparamParams, ReducedParams, BaselineParams>;
using InterpretableParams = std::variant<OriginalParams, ReducedOriginalParams, BaselineParams>;

struct FitResult {
    ModelKind model = ModelKind::Full;
    LikelihoodMode mode = LikelihoodMode::Marginal;
    EstimableParams thetaPrime;
    InterpretableParams theta;
    std::vector<ParamEstimate> reparam;   // estimable space, ParameterLayout order
    std::vector<ParamEstimate> original;  // interpretable space, same order
    Vector optimum;                       // free vector (log θε) at the reported point
    Vector covariateMeans;                // raw means removed before fitting
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    double residualVar = 0.0;  // θε
    int nParams = 0;
    int n = 0;
    bool converged = false;
    int attempts = 0;
    int iterations = 0;
    std::string stopReason;
    bool seAvailable = false;
    bool singularInformation = false;
    ImproperFlags improperFlags;

    const ParamEstimate* find(std::string_view name, bool originalSpace = true) const;
};

/// Free-vector <-> typed parameter conversions. Typed parameters carry the
/// centered-covariate moments (muX = 0, Phi) passed in.
ReparamParams unpack_full(const Vector& free, const Vector& muX, const Matrix& Phi);
ReducedParams unpack_reduced(const Vector& free, const Vector& muX, const Matrix& Phi);
BaselineParams unpack_baseline(ModelKind kind, const Vector& free, const Vector& muX, const Matrix& Phi);
Vector pack_full(const ReparamParams& p);
Vector pack_reduced(const ReducedParams& p);

/// Interpretable-space parameter vector (θε on its natural scale) implied by a
/// free vector, in ParameterLayout order.
Vector interpretable_vector(ModelKind kind, const Vector& free, int covariates);

/// Starting free vector: knot at the midpoint of the pooled time range,
/// pooled least-squares lines on each side of it for the means, per-person
/// least-squares fits for the factor variances and the residual variance,
/// zero path coefficients.
Vector initial_values(const LongitudinalDataset& data, ModelKind kind);

/// Attempt-specific start: attempt 1 is the unperturbed start; later attempts
/// scale every natural-scale entry by U(0.8, 1.2) from a stream keyed by
/// (seed, attempt).
Vector jittered_start(const Vector& start, ModelKind kind, int covariates, std::uint64_t seed, int attempt);

FitResult fit_model(ModelKind kind, const LongitudinalDataset& data, const FitOptions& options);
FitResult fit_full(const LongitudinalDataset& data, const FitOptions& options);
FitResult fit_reduced(const LongitudinalDataset& data, const FitOptions& options);

enum class BaselineForm { Linear, Quadratic };
FitResult fit_baseline(const LongitudinalDataset& data, BaselineForm form, const FitOptions& options);

/// Observed-information standard errors at fit.optimum plus delta-method
/// standard errors in the interpretable space. Sets singularInformation (and
/// leaves SEs absent) when the information matrix is not invertible.
FitResult standard_errors(FitResult fit, const LongitudinalDataset& data, double ciLevel = 0.95);

/// Central-difference Hessian of -loglik in free coordinates, with step
/// max(1e-4, 1e-4 |x_k|) per coordinate.
Matrix observed_information(const FimlObjective& objective, const Vector& at);

std::pair<double, double> wald_ci(double estimate, double se, double level);

ImproperFlags diagnose_improper(const FitResult& fit);

struct InformationCriteria {
    double aic = 0.0;
    double bic = 0.0;
};

InformationCriteria information_criteria(double loglik, int p, int n);

struct ComparisonRow {
    ModelKind model = ModelKind::Full;
    double minus2LogLik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    int nParams = 0;
    double residualVar = 0.0;
    bool converged = false;
};

/// Fits full, reduced, linear and quadratic models and orders them by AIC.
/// Models the data cannot identify are skipped.
std::vector<ComparisonRow> compare_models(const LongitudinalDataset& data, const FitOptions& options);

}  // namespace pwlgm
