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

#include "pwlgm/simgen.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace pwlgm {

std::uint64_t derive_seed(std::uint64_t masterSeed, std::uint64_t index) {
    // splitmix64 over a mix of both inputs.
    std::uint64_t z = masterSeed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void SimCondition::validate() const {
    if (n < 1) throw Error(ErrorCode::InvalidCondition, "sample size must be positive");
    if (J < 2) throw Error(ErrorCode::InvalidCondition, "need at least two waves");
    if (!(knotMean > 0.0 && knotMean < static_cast<double>(J - 1)))
        throw Error(ErrorCode::InvalidCondition, "knot mean must lie strictly inside the time range (0, " +
                                                     std::to_string(J - 1) + ")");
    if (!(knotSD >= 0.0)) throw Error(ErrorCode::InvalidCondition, "knot SD must be non-negative");
    if (!(explainedShare > 0.0 && explainedShare < 1.0))
        throw Error(ErrorCode::InvalidCondition, "explained share must lie in (0, 1)");
    if (!(thetaEps >= 0.0)) throw Error(ErrorCode::InvalidCondition, "residual variance must be non-negative");
    if (!(delta >= 0.0 && delta < 0.5))
        throw Error(ErrorCode::InvalidCondition, "time-window half-width must lie in [0, 0.5)");
    if (!(interceptVar >= 0.0 && slopeVar >= 0.0) || !(std::abs(rho) <= 1.0))
        throw Error(ErrorCode::InvalidCondition, "invalid fixed variance block");
    if (covariates < 0) throw Error(ErrorCode::InvalidCondition, "negative covariate count");
}

bool operator==(const SimCondition& a, const SimCondition& b) {
    return a.n == b.n && a.J == b.J && a.knotMean == b.knotMean && a.knotSD == b.knotSD &&
           a.slopeDiff == b.slopeDiff && a.explainedShare == b.explainedShare && a.thetaEps == b.thetaEps &&
           a.delta == b.delta && a.interceptMean == b.interceptMean && a.interceptVar == b.interceptVar &&
           a.slope1Mean == b.slope1Mean && a.slopeVar == b.slopeVar && a.rho == b.rho &&
           a.covariates == b.covariates;
}

OriginalParams condition_to_params(const SimCondition& cond) {
    cond.validate();
    OriginalParams p;
    p.alpha << cond.interceptMean, cond.slope1Mean, cond.slope1Mean - cond.slopeDiff, cond.knotMean;
    const Vector4 sd(std::sqrt(cond.interceptVar), std::sqrt(cond.slopeVar), std::sqrt(cond.slopeVar), cond.knotSD);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) p.Psi(r, c) = (r == c ? 1.0 : cond.rho) * sd(r) * sd(c);

    const int C = cond.covariates;
    p.B = Matrix::Zero(4, C);
    if (C > 0) {
        const double share = cond.explainedShare;
        for (int k = 0; k < 4; ++k) {
            const double b = std::sqrt(share * p.Psi(k, k) / (static_cast<double>(C) * (1.0 - share)));
            p.B.row(k).setConstant(b);
        }
    }
    p.muX = Vector::Zero(C);
    p.Phi = Matrix::Identity(C, C);
    p.thetaEps = cond.thetaEps;
    return p;
}

JointMoments joint_factor_tic_moments(const OriginalParams& theta) {
    const auto c = static_cast<Eigen::Index>(theta.covariates());
    const Matrix B = theta.B.size() == 0 ? Matrix::Zero(4, c) : theta.B;
    JointMoments m;
    m.mu.resize(4 + c);
    m.mu << theta.alpha, theta.muX;
    m.Sigma.resize(4 + c, 4 + c);
    const Matrix BPhi = B * theta.Phi;
    m.Sigma.topLeftCorner(4, 4) = BPhi * B.transpose() + theta.Psi;
    m.Sigma.topRightCorner(4, c) = BPhi;
    m.Sigma.bottomLeftCorner(c, 4) = BPhi.transpose();
    m.Sigma.bottomRightCorner(c, c) = theta.Phi;
    m.Sigma = 0.5 * (m.Sigma + m.Sigma.transpose()).eval();
    return m;
}

FactorDraws sample_factors_tics(const OriginalParams& theta, int n, Rng& rng) {
    if (n < 0) throw Error(ErrorCode::InvalidArgument, "negative sample size");
    const JointMoments jm = joint_factor_tic_moments(theta);
    const Eigen::Index dim = jm.mu.size();

    std::vector<Eigen::Index> active;
    for (Eigen::Index k = 0; k < dim; ++k) {
        if (jm.Sigma(k, k) > 0.0) {
            active.push_back(k);
        } else if (jm.Sigma(k, k) < 0.0) {
            throw Error(ErrorCode::NonPSDJoint, "joint covariance has a negative variance");
        } else {
            for (Eigen::Index l = 0; l < dim; ++l)
                if (jm.Sigma(k, l) != 0.0)
                    throw Error(ErrorCode::NonPSDJoint, "zero-variance coordinate with nonzero covariance");
        }
    }
    const auto m = static_cast<Eigen::Index>(active.size());
    Matrix sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = jm.Sigma(active[a], active[b]);
    Matrix chol = Matrix::Zero(m, m);
    if (m > 0) {
        Eigen::LLT<Matrix> llt(sub);
        if (llt.info() != Eigen::Success)
            throw Error(ErrorCode::NonPSDJoint, "joint factor/TIC covariance is not positive definite");
        chol = llt.matrixL();
    }

    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix draws(n, dim);
    Vector z(m);
    for (int i = 0; i < n; ++i) {
        for (Eigen::Index a = 0; a < m; ++a) z(a) = normal(rng);
        const Vector dev = chol * z;
        Vector row = jm.mu;
        for (Eigen::Index a = 0; a < m; ++a) row(active[a]) += dev(a);
        draws.row(i) = row.transpose();
    }
    FactorDraws out;
    out.eta = draws.leftCols(4);
    out.X = draws.rightCols(dim - 4);
    return out;
}

Matrix gen_schedule(int n, int J, double delta, Rng& rng) {
    if (!(delta >= 0.0 && delta < 0.5))
        throw Error(ErrorCode::InvalidArgument, "time-window half-width must lie in [0, 0.5)");
    Matrix T(n, J);
    if (delta == 0.0) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < J; ++j) T(i, j) = static_cast<double>(j);
        return T;
    }
    std::uniform_real_distribution<double> window(-delta, delta);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < J; ++j) T(i, j) = static_cast<double>(j) + window(rng);
    return T;
}

GeneratedData gen_dataset(const SimCondition& cond, std::uint64_t seed) {
    const OriginalParams truth = condition_to_params(cond);
    Rng rng(seed);
    const FactorDraws draws = sample_factors_tics(truth, cond.n, rng);
    const Matrix T = gen_schedule(cond.n, cond.J, cond.delta, rng);
    const double noiseSd = std::sqrt(cond.thetaEps);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix Y(cond.n, cond.J);
    for (int i = 0; i < cond.n; ++i) {
        const GrowthFactors f{draws.eta(i, 0), draws.eta(i, 1), draws.eta(i, 2), draws.eta(i, 3)};
        const Vector traj = predict_trajectory(f, T.row(i).transpose());
        for (int j = 0; j < cond.J; ++j) {
            const double e = normal(rng);
            Y(i, j) = traj(j) + (noiseSd > 0.0 ? noiseSd * e : 0.0);
        }
    }
    return {LongitudinalDataset(Y, T, draws.X), truth, draws.eta};
}

std::vector<SimCondition> design_grid() {
    struct TimeCell {
        int J;
        double knot;
    };
    const TimeCell times[] = {{6, 2.5}, {10, 3.5}, {10, 4.5}, {10, 5.5}};
    const int sizes[] = {200, 500};
    const double diffs[] = {1.6, -1.6, 2.4, -2.4, 3.2, -3.2};
    const double knotSDs[] = {0.0, 0.3, 0.6};
    const double shares[] = {0.13, 0.26};
    const double thetas[] = {1.0, 2.0};
    std::vector<SimCondition> grid;
    grid.reserve(576);
    for (const auto& tc : times)
        for (int n : sizes)
            for (double d : diffs)
                for (double sd : knotSDs)
                    for (double share : shares)
                        for (double th : thetas) {
                            SimCondition c;
                            c.n = n;
                            c.J = tc.J;
                            c.knotMean = tc.knot;
                            c.knotSD = sd;
                            c.slopeDiff = d;
                            c.explainedShare = share;
                            c.thetaEps = th;
                            grid.push_back(c);
                        }
    return grid;
}

}  // namespace pwlgm
