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

#include "pwlgm/reparam.hpp"

namespace pwlgm {

namespace {

Matrix paths_or_zero(const Matrix& B, Eigen::Index rows, std::size_t c) {
    const auto cols = static_cast<Eigen::Index>(c);
    if (B.size() == 0) return Matrix::Zero(rows, cols);
    if (B.rows() != rows || B.cols() != cols)
        throw Error(ErrorCode::InvalidArgument, "path coefficient matrix has the wrong shape");
    return B;
}

}  // namespace

Vector4 f_mean(const Vector4& mu) {
    return {mu(0) + mu(3) * mu(1), 0.5 * (mu(1) + mu(2)), 0.5 * (mu(2) - mu(1)), 0.0};
}

Vector4 h_mean(const Vector4& m, double knotMean) {
    return {m(0) - knotMean * m(1) + knotMean * m(2), m(1) - m(2), m(1) + m(2), m(3) + knotMean};
}

Matrix4 jac_f(const Vector4& mu) {
    Matrix4 J;
    // clang-format off
    J << 1.0, mu(3), 0.0, mu(1),
         0.0,  0.5,  0.5, 0.0,
         0.0, -0.5,  0.5, 0.0,
         0.0,  0.0,  0.0, 1.0;
    // clang-format on
    return J;
}

Matrix4 jac_h(const Vector4& m, InverseJacobian variant) {
    const double k = m(3);
    const double corner = variant == InverseJacobian::Displayed ? 0.0 : -(m(1) - m(2));
    Matrix4 J;
    // clang-format off
    J << 1.0,  -k,    k, corner,
         0.0, 1.0, -1.0, 0.0,
         0.0, 1.0,  1.0, 0.0,
         0.0, 0.0,  0.0, 1.0;
    // clang-format on
    return J;
}

ReparamParams to_reparam(const OriginalParams& theta) {
    const Matrix4 Jf = jac_f(theta.alpha);
    ReparamParams out;
    out.alphaPrime = f_mean(theta.alpha);
    out.alphaPrime(3) = theta.alpha(3);
    out.PsiPrime = Jf * theta.Psi * Jf.transpose();
    out.BPrime = Jf * paths_or_zero(theta.B, 4, theta.covariates());
    out.muX = theta.muX;
    out.Phi = theta.Phi;
    out.thetaEps = theta.thetaEps;
    return out;
}

OriginalParams from_reparam(const ReparamParams& tp, InverseJacobian variant) {
    Vector4 meanPrime = tp.alphaPrime;
    meanPrime(3) = 0.0;
    const Matrix4 Jh = jac_h(tp.alphaPrime, variant);
    OriginalParams out;
    out.alpha = h_mean(meanPrime, tp.knotMean());
    out.Psi = Jh * tp.PsiPrime * Jh.transpose();
    out.B = Jh * paths_or_zero(tp.BPrime, 4, tp.covariates());
    out.muX = tp.muX;
    out.Phi = tp.Phi;
    out.thetaEps = tp.thetaEps;
    return out;
}

OriginalParams from_reparam_cellwise(const ReparamParams& tp) {
    const double k = tp.knotMean();
    const Vector4& a = tp.alphaPrime;
    const Matrix4& P = tp.PsiPrime;
    // Estimable-space cells, indices 0..2 for the three reparameterized factors
    // and 3 for the knot deviation.
    const double p00 = P(0, 0), p01 = P(0, 1), p02 = P(0, 2), p0g = P(0, 3);
    const double p11 = P(1, 1), p12 = P(1, 2), p1g = P(1, 3);
    const double p22 = P(2, 2), p2g = P(2, 3), pgg = P(3, 3);

    OriginalParams out;
    out.alpha(0) = a(0) - k * a(1) + k * a(2);
    out.alpha(1) = a(1) - a(2);
    out.alpha(2) = a(2) + a(1);
    out.alpha(3) = k;

    const double psi00 = (p11 + p22 - 2.0 * p12) * k * k + 2.0 * (p02 - p01) * k + p00;
    const double psi01 = (2.0 * p12 - p11 - p22) * k + (p01 - p02);
    const double psi02 = (p22 - p11) * k + (p01 + p02);
    const double psi0g = (p2g - p1g) * k + p0g;
    const double psi11 = p11 + p22 - 2.0 * p12;
    const double psi12 = p11 - p22;
    const double psi1g = p1g - p2g;
    const double psi22 = p11 + p22 + 2.0 * p12;
    const double psi2g = p1g + p2g;
    const double psigg = pgg;
    // clang-format off
    out.Psi << psi00, psi01, psi02, psi0g,
               psi01, psi11, psi12, psi1g,
               psi02, psi12, psi22, psi2g,
               psi0g, psi1g, psi2g, psigg;
    // clang-format on

    const Matrix Bp = paths_or_zero(tp.BPrime, 4, tp.covariates());
    out.B.resize(4, Bp.cols());
    for (Eigen::Index c = 0; c < Bp.cols(); ++c) {
        out.B(0, c) = Bp(0, c) - k * Bp(1, c) + k * Bp(2, c);
        out.B(1, c) = Bp(1, c) - Bp(2, c);
        out.B(2, c) = Bp(1, c) + Bp(2, c);
        out.B(3, c) = Bp(3, c);
    }
    out.muX = tp.muX;
    out.Phi = tp.Phi;
    out.thetaEps = tp.thetaEps;
    return out;
}

ReducedOriginalParams reduce_transform(const ReducedParams& tp) {
    Vector4 m;
    m << tp.alphaPrime, 0.0;
    const Vector4 full = h_mean(m, tp.gamma);
    Vector4 at;
    at << tp.alphaPrime, tp.gamma;
    const Matrix3 Jh = jac_h(at).topLeftCorner<3, 3>();
    ReducedOriginalParams out;
    out.alpha = full.head<3>();
    out.gamma = tp.gamma;
    out.Psi = Jh * tp.PsiPrime * Jh.transpose();
    out.B = Jh * paths_or_zero(tp.BPrime, 3, tp.covariates());
    out.muX = tp.muX;
    out.Phi = tp.Phi;
    out.thetaEps = tp.thetaEps;
    return out;
}

ReducedParams reduce_to_reparam(const ReducedOriginalParams& theta) {
    Vector4 m;
    m << theta.alpha, theta.gamma;
    const Matrix3 Jf = jac_f(m).topLeftCorner<3, 3>();
    ReducedParams out;
    out.alphaPrime = f_mean(m).head<3>();
    out.gamma = theta.gamma;
    out.PsiPrime = Jf * theta.Psi * Jf.transpose();
    out.BPrime = Jf * paths_or_zero(theta.B, 3, static_cast<std::size_t>(theta.muX.size()));
    out.muX = theta.muX;
    out.Phi = theta.Phi;
    out.thetaEps = theta.thetaEps;
    return out;
}

}  // namespace pwlgm
