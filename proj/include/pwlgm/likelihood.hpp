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

#include <span>
#include <string>
#include <vector>

namespace pwlgm {

// Per-individual Gaussian log-likelihood with constant -(dim/2) ln(2π).
// Marginal mode returns the joint density of (y_i, x_i); conditional mode the
// density of y_i given x_i. Throws NonPDCovariance when Σ_i is not PD.
double loglik_individual(const ReparamParams& params, const Vector& y, const Vector& t, const Vector& x,
                         LikelihoodMode mode);
double loglik_individual(const ReducedParams& params, const Vector& y, const Vector& t, const Vector& x,
                         LikelihoodMode mode);

/// Sum over individuals; the NonPDCovariance message names the offending row.
double loglik_total(const ReparamParams& params, const LongitudinalDataset& data, LikelihoodMode mode);
double loglik_total(const ReducedParams& params, const LongitudinalDataset& data, LikelihoodMode mode);

/// Log density of x under N(mean, cov); throws NonPDCovariance if cov is not PD.
double mvn_logpdf(const Vector& x, const Vector& mean, const Matrix& cov);

enum class ModelKind { Full, Reduced, Linear, Quadratic };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Minimum number of waves for which the model is identified.
std::size_t minimum_waves(ModelKind kind);

/// Position of every block inside the optimizer's free-parameter vector:
/// [factor means | knot | vech(Ψ') row-wise upper | B' row-major | log θε].
/// For the full model the free means are the three reparameterized factor
/// means; the knot deviation has mean zero and its location is the knot slot.
struct ParameterLayout {
    ModelKind kind = ModelKind::Full;
    int factors = 4;
    int means = 3;
    bool knot = true;
    int covariates = 0;

    static ParameterLayout of(ModelKind kind, int covariates);

    int knotIndex() const { return means; }
    int psiOffset() const { return means + (knot ? 1 : 0); }
    int psiCount() const { return factors * (factors + 1) / 2; }
    int bOffset() const { return psiOffset() + psiCount(); }
    int logThetaIndex() const { return bOffset() + factors * covariates; }
    int size() const { return logThetaIndex() + 1; }

    /// Position of Ψ'(r, c) inside the vech block.
    int psiIndex(int r, int c) const;

    /// Parameter names in vector order; estimable-space names of the piecewise
    /// models carry a "p" suffix.
    std::vector<std::string> names(bool interpretable = false) const;

    /// Growth-factor labels used in improper-solution flags.
    std::vector<std::string> factorNames() const;
};

/// Factor loadings of any supported model for one row of occasions. knot is
/// ignored by the polynomial models; halfDiffMean only enters the full model.
Matrix build_loadings(ModelKind kind, const Vector& t, double knot, double halfDiffMean);

/// Objective minimized by the estimator: minus the FIML log-likelihood, with
/// the covariate density folded in as a constant in marginal mode (μX and Φ are
/// the sample moments of the centered covariates). The analytic gradient is
/// with respect to the free vector of ParameterLayout.
class FimlObjective {
public:
    FimlObjective(ModelKind kind, const LongitudinalDataset& centeredData, LikelihoodMode mode);

    const ParameterLayout& layout() const { return layout_; }
    LikelihoodMode mode() const { return mode_; }
    const LongitudinalDataset& data() const { return data_; }
    const Matrix& covariateCovariance() const { return phi_; }

    /// Sum over individuals of log N(x_i; 0, Φ) in marginal mode, 0 otherwise.
    double covariateTerm() const { return xTerm_; }

    /// -loglik, or +infinity if any Σ_i is not positive definite.
    double value(std::span<const double> x) const;

    /// As value(); grad receives the gradient (left unspecified when infinite).
    double valueAndGradient(std::span<const double> x, std::span<double> grad) const;

private:
    double evaluate(std::span<const double> x, double* grad) const;

    ParameterLayout layout_;
    LongitudinalDataset data_;
    LikelihoodMode mode_;
    Matrix phi_;
    double xTerm_ = 0.0;
};

}  // namespace pwlgm
