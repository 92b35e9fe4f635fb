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

#include "pwlgm/model.hpp"

#include <cmath>

namespace pwlgm {

Matrix build_loadings_full(const Vector& t, double knotMean, double halfDiffMean) {
    const Eigen::Index J = t.size();
    Matrix L(J, 4);
    for (Eigen::Index j = 0; j < J; ++j) {
        const double d = t(j) - knotMean;
        L(j, 0) = 1.0;
        L(j, 1) = d;
        L(j, 2) = std::abs(d);
        L(j, 3) = -halfDiffMean - halfDiffMean * sign0(d);
    }
    return L;
}

Matrix build_loadings_reduced(const Vector& t, double gamma) {
    const Eigen::Index J = t.size();
    Matrix L(J, 3);
    for (Eigen::Index j = 0; j < J; ++j) {
        const double d = t(j) - gamma;
        L(j, 0) = 1.0;
        L(j, 1) = d;
        L(j, 2) = std::abs(d);
    }
    return L;
}

namespace {

Matrix coefficients_or_empty(const Matrix& B, Eigen::Index K, Eigen::Index c) {
    if (B.rows() == K && B.cols() == c) return B;
    if (B.size() == 0) return Matrix::Zero(K, c);
    throw Error(ErrorCode::InvalidArgument, "path coefficient matrix has the wrong shape");
}

// Shared body of the full and reduced moment structures: factorMean already
// carries the intercepts (with a zero knot-deviation mean for the full model).
Moments moments_from(const Matrix& L, const Vector& factorMean, const Matrix& Psi, const Matrix& B,
                     const Vector& muX, const Matrix& Phi, double thetaEps, LikelihoodMode mode,
                     const std::optional<Vector>& x) {
    const Eigen::Index c = muX.size();
    Moments m;
    Vector eta = factorMean;
    Matrix G = Psi;
    if (c > 0) {
        if (mode == LikelihoodMode::Conditional) {
            if (!x) throw Error(ErrorCode::InvalidArgument, "conditional moments need covariate values");
            if (x->size() != c) throw Error(ErrorCode::InvalidArgument, "covariate vector length mismatch");
            eta += B * (*x);
        } else {
            eta += B * muX;
            G += B * Phi * B.transpose();
        }
    } else if (mode == LikelihoodMode::Conditional && x && x->size() != 0) {
        throw Error(ErrorCode::InvalidArgument, "covariate vector length mismatch");
    }
    m.mu = L * eta;
    m.Sigma = L * G * L.transpose();
    m.Sigma.diagonal().array() += thetaEps;
    m.Sigma = 0.5 * (m.Sigma + m.Sigma.transpose()).eval();
    return m;
}

Moments joint_from(const Matrix& L, const Vector& factorMean, const Matrix& Psi, const Matrix& B,
                   const Vector& muX, const Matrix& Phi, double thetaEps) {
    const Moments y = moments_from(L, factorMean, Psi, B, muX, Phi, thetaEps, LikelihoodMode::Marginal,
                                   std::nullopt);
    const Eigen::Index J = L.rows();
    const Eigen::Index c = muX.size();
    Moments m;
    m.mu.resize(J + c);
    m.mu << y.mu, muX;
    m.Sigma.resize(J + c, J + c);
    m.Sigma.topLeftCorner(J, J) = y.Sigma;
    if (c > 0) {
        const Matrix cross = L * B * Phi;
        m.Sigma.topRightCorner(J, c) = cross;
        m.Sigma.bottomLeftCorner(c, J) = cross.transpose();
        m.Sigma.bottomRightCorner(c, c) = 0.5 * (Phi + Phi.transpose());
    }
    return m;
}

}  // namespace

Moments model_moments_full(const ReparamParams& p, const Vector& t, LikelihoodMode mode,
                           const std::optional<Vector>& x) {
    const Matrix L = build_loadings_full(t, p.alphaPrime(3), p.alphaPrime(2));
    Vector mean(4);
    mean << p.alphaPrime(0), p.alphaPrime(1), p.alphaPrime(2), 0.0;
    const auto c = static_cast<Eigen::Index>(p.covariates());
    return moments_from(L, mean, p.PsiPrime, coefficients_or_empty(p.BPrime, 4, c), p.muX, p.Phi, p.thetaEps,
                        mode, x);
}

Moments model_moments_reduced(const ReducedParams& p, const Vector& t, LikelihoodMode mode,
                              const std::optional<Vector>& x) {
    const Matrix L = build_loadings_reduced(t, p.gamma);
    const Vector mean = p.alphaPrime;
    const auto c = static_cast<Eigen::Index>(p.covariates());
    return moments_from(L, mean, p.PsiPrime, coefficients_or_empty(p.BPrime, 3, c), p.muX, p.Phi, p.thetaEps,
                        mode, x);
}

Moments joint_moments_full(const ReparamParams& p, const Vector& t) {
    const Matrix L = build_loadings_full(t, p.alphaPrime(3), p.alphaPrime(2));
    Vector mean(4);
    mean << p.alphaPrime(0), p.alphaPrime(1), p.alphaPrime(2), 0.0;
    const auto c = static_cast<Eigen::Index>(p.covariates());
    return joint_from(L, mean, p.PsiPrime, coefficients_or_empty(p.BPrime, 4, c), p.muX, p.Phi, p.thetaEps);
}

Moments joint_moments_reduced(const ReducedParams& p, const Vector& t) {
    const Matrix L = build_loadings_reduced(t, p.gamma);
    const auto c = static_cast<Eigen::Index>(p.covariates());
    return joint_from(L, p.alphaPrime, p.PsiPrime, coefficients_or_empty(p.BPrime, 3, c), p.muX, p.Phi,
                      p.thetaEps);
}

Vector predict_trajectory(const GrowthFactors& f, const Vector& t) {
    Vector y(t.size());
    for (Eigen::Index j = 0; j < t.size(); ++j) {
        y(j) = t(j) <= f.gamma ? f.eta0 + f.eta1 * t(j)
                               : f.eta0 + f.eta1 * f.gamma + f.eta2 * (t(j) - f.gamma);
    }
    return y;
}

}  // namespace pwlgm
