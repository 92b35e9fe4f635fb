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

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwlgm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Vector4 = Eigen::Vector4d;
using Matrix4 = Eigen::Matrix4d;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

enum class ErrorCode {
    InvalidArgument,
    InvalidData,
    Identification,
    DegenerateData,
    NonPDCovariance,
    SingularInformation,
    NonPSDJoint,
    InvalidCondition,
    TooFewReps,
    Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// How observed covariates enter the likelihood. Marginal models (y, x) jointly,
// so the y-block moments are Λ'(α'+B'μX) and Λ'(Ψ'+B'ΦB'ᵀ)Λ'ᵀ+θI; conditional
// treats x_i as fixed regressors.
enum class LikelihoodMode { Marginal, Conditional };

const char* to_string(LikelihoodMode mode);
LikelihoodMode likelihood_mode_from_string(const std::string& s);

/// Individual growth factors in the interpretable space.
struct GrowthFactors {
    double eta0 = 0.0;   // intercept
    double eta1 = 0.0;   // pre-knot slope
    double eta2 = 0.0;   // post-knot slope
    double gamma = 0.0;  // knot
};

/// Individual growth factors in the estimable space.
struct ReparamFactors {
    double eta0p = 0.0;  // measurement at the knot
    double eta1p = 0.0;  // mean of the two slopes
    double eta2p = 0.0;  // half-difference of the slopes
    double delta = 0.0;  // knot deviation from the knot mean
};

/// Full (random-knot) model, interpretable space.
/// alpha = (mu_eta0, mu_eta1, mu_eta2, mu_gamma); Psi is the unexplained
/// growth-factor covariance; B is 4 x c.
struct OriginalParams {
    Vector4 alpha = Vector4::Zero();
    Matrix4 Psi = Matrix4::Zero();
    Matrix B;
    Vector muX;
    Matrix Phi;
    double thetaEps = 1.0;

    std::size_t covariates() const { return static_cast<std::size_t>(muX.size()); }
};

/// Full model, estimable space. alphaPrime(3) is the knot mean, shared
/// verbatim with OriginalParams::alpha(3); the mean of the knot deviation is 0.
struct ReparamParams {
    Vector4 alphaPrime = Vector4::Zero();
    Matrix4 PsiPrime = Matrix4::Zero();
    Matrix BPrime;
    Vector muX;
    Matrix Phi;
    double thetaEps = 1.0;

    double knotMean() const { return alphaPrime(3); }
    std::size_t covariates() const { return static_cast<std::size_t>(muX.size()); }
};

/// Reduced (fixed-knot) model, estimable space.
struct ReducedParams {
    Vector3 alphaPrime = Vector3::Zero();
    double gamma = 0.0;
    Matrix3 PsiPrime = Matrix3::Zero();
    Matrix BPrime;
    Vector muX;
    Matrix Phi;
    double thetaEps = 1.0;

    std::size_t covariates() const { return static_cast<std::size_t>(muX.size()); }
};

/// Reduced model mapped back to the interpretable space.
struct ReducedOriginalParams {
    Vector3 alpha = Vector3::Zero();
    double gamma = 0.0;
    Matrix3 Psi = Matrix3::Zero();
    Matrix B;
    Vector muX;
    Matrix Phi;
    double thetaEps = 1.0;
};

/// Polynomial latent growth model (linear: K = 2, quadratic: K = 3).
struct BaselineParams {
    Vector alpha;
    Matrix Psi;
    Matrix B;
    Vector muX;
    Matrix Phi;
    double thetaEps = 1.0;
};

/// Wide-layout longitudinal data: row i holds individual i's outcomes, their
/// measurement occasions and their time-invariant covariates.
class LongitudinalDataset {
public:
    LongitudinalDataset() = default;
    LongitudinalDataset(Matrix Y, Matrix T, Matrix X, std::vector<std::string> ids = {});

    std::size_t n() const { return static_cast<std::size_t>(Y_.rows()); }
    std::size_t waves() const { return static_cast<std::size_t>(Y_.cols()); }
    std::size_t covariates() const { return static_cast<std::size_t>(X_.cols()); }

    const Matrix& Y() const { return Y_; }
    const Matrix& T() const { return T_; }
    const Matrix& X() const { return X_; }
    const std::vector<std::string>& ids() const { return ids_; }

    bool centered() const { return centered_; }
    // Raw covariate means removed by centered(); empty unless centered.
    const Vector& covariateMeans() const { return xMeans_; }

    /// Copy with covariates centered at their sample means.
    LongitudinalDataset centeredCopy() const;

    /// Same data with rows in the given order.
    LongitudinalDataset permuted(const std::vector<std::size_t>& order) const;

private:
    Matrix Y_;
    Matrix T_;
    Matrix X_;
    std::vector<std::string> ids_;
    Vector xMeans_;
    bool centered_ = false;
};

}  // namespace pwlgm
