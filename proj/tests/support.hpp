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

// Random generators and independent reference implementations shared by the
// unit, property and acceptance tests.

#pragma once

#include "pwlgm/types.hpp"

#include <Eigen/LU>

#include <cmath>
#include <random>

namespace pwlgm::testing {

using Gen = std::mt19937_64;

inline double uniform(Gen& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }

inline double normal(Gen& g) { return std::normal_distribution<double>(0.0, 1.0)(g); }

inline Matrix random_matrix(Gen& g, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * normal(g);
    return m;
}

inline Matrix random_spd(Gen& g, Eigen::Index k, double ridge = 0.1) {
    const Matrix A = random_matrix(g, k, k);
    return A * A.transpose() + ridge * Matrix::Identity(k, k);
}

/// Symmetric but not necessarily definite.
inline Matrix random_symmetric(Gen& g, Eigen::Index k) {
    const Matrix A = random_matrix(g, k, k);
    return 0.5 * (A + A.transpose());
}

inline ReparamParams random_reparam(Gen& g, int c, bool definite = true) {
    ReparamParams p;
    p.alphaPrime << uniform(g, -50, 150), uniform(g, -6, 6), uniform(g, -3, 3), uniform(g, 0.5, 9);
    p.PsiPrime = definite ? random_spd(g, 4) : random_symmetric(g, 4);
    p.BPrime = random_matrix(g, 4, c);
    p.muX = Vector::Zero(c);
    p.Phi = random_spd(g, c, 0.5);
    p.thetaEps = uniform(g, 0.2, 3.0);
    return p;
}

inline OriginalParams random_original(Gen& g, int c) {
    OriginalParams p;
    p.alpha << uniform(g, -50, 150), uniform(g, -6, 6), uniform(g, -6, 6), uniform(g, 0.5, 9);
    p.Psi = random_spd(g, 4);
    p.B = random_matrix(g, 4, c);
    p.muX = Vector::Zero(c);
    p.Phi = random_spd(g, c, 0.5);
    p.thetaEps = uniform(g, 0.2, 3.0);
    return p;
}

/// Strictly increasing occasions near 0..J-1.
inline Vector random_times(Gen& g, int J, double jitter = 0.25) {
    Vector t(J);
    for (int j = 0; j < J; ++j) t(j) = j + uniform(g, -jitter, jitter);
    return t;
}

/// Dense multivariate normal log density through an LU factorization: shares
/// nothing with the library's Cholesky route.
inline double dense_mvn_logpdf(const Vector& y, const Vector& mu, const Matrix& S) {
    const Eigen::FullPivLU<Matrix> lu(S);
    const Vector r = y - mu;
    const double quad = r.dot(lu.solve(r));
    const double logdet = std::log(lu.determinant());
    return -0.5 * static_cast<double>(y.size()) * std::log(2.0 * 3.14159265358979323846) - 0.5 * logdet -
           0.5 * quad;
}

}  // namespace pwlgm::testing
