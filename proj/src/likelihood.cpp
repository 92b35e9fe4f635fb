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

#include "pwlgm/likelihood.hpp"

#include "pwlgm/model.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <numbers>

namespace pwlgm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2π)

const char* const kFullLabels[] = {"0", "1", "2", "g"};
const char* const kPolyLabels[] = {"0", "1", "2"};

// Log density from an existing Cholesky factor.
double logpdf_from(const Eigen::LLT<Matrix>& llt, const Vector& resid) {
    const auto& L = llt.matrixLLT();
    double logdet = 0.0;
    for (Eigen::Index k = 0; k < L.rows(); ++k) logdet += std::log(L(k, k));
    const Vector z = llt.matrixL().solve(resid);
    return -0.5 * static_cast<double>(resid.size()) * kLog2Pi - logdet - 0.5 * z.squaredNorm();
}

template <class Params, class MomentsFn>
double individual(const Params& p, const Vector& y, const Vector& t, const Vector& x, LikelihoodMode mode,
                  MomentsFn moments) {
    if (y.size() != t.size()) throw Error(ErrorCode::InvalidArgument, "outcome and time vectors differ in length");
    const Moments cond = moments(p, t, LikelihoodMode::Conditional, x);
    Eigen::LLT<Matrix> llt(cond.Sigma);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NonPDCovariance, "model-implied covariance is not positive definite");
    double ll = logpdf_from(llt, y - cond.mu);
    if (mode == LikelihoodMode::Marginal && x.size() > 0) {
        // p(y, x) = p(y | x) p(x) under the joint normal model.
        ll += mvn_logpdf(x, p.muX, p.Phi);
    }
    return ll;
}

template <class Params>
double total(const Params& p, const LongitudinalDataset& data, LikelihoodMode mode) {
    double sum = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        try {
            sum += loglik_individual(p, data.Y().row(r).transpose(), data.T().row(r).transpose(),
                                     data.X().row(r).transpose(), mode);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NonPDCovariance) throw;
            throw Error(ErrorCode::NonPDCovariance, std::string(e.what()) + " for individual " + std::to_string(i) +
                                                        " (id " + data.ids()[i] + ")");
        }
    }
    return sum;
}

}  // namespace

double mvn_logpdf(const Vector& x, const Vector& mean, const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NonPDCovariance, "covariance is not positive definite");
    return logpdf_from(llt, x - mean);
}

double loglik_individual(const ReparamParams& p, const Vector& y, const Vector& t, const Vector& x,
                         LikelihoodMode mode) {
    return individual(p, y, t, x, mode, [](const ReparamParams& q, const Vector& tt, LikelihoodMode m,
                                           const Vector& xx) { return model_moments_full(q, tt, m, xx); });
}

double loglik_individual(const ReducedParams& p, const Vector& y, const Vector& t, const Vector& x,
                         LikelihoodMode mode) {
    return individual(p, y, t, x, mode, [](const ReducedParams& q, const Vector& tt, LikelihoodMode m,
                                           const Vector& xx) { return model_moments_reduced(q, tt, m, xx); });
}

double loglik_total(const ReparamParams& p, const LongitudinalDataset& data, LikelihoodMode mode) {
    return total(p, data, mode);
}

double loglik_total(const ReducedParams& p, const LongitudinalDataset& data, LikelihoodMode mode) {
    return total(p, data, mode);
}

const char* to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::Full: return "full";
    case ModelKind::Reduced: return "reduced";
    case ModelKind::Linear: return "linear";
    case ModelKind::Quadratic: return "quadratic";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "full") return ModelKind::Full;
    if (s == "reduced") return ModelKind::Reduced;
    if (s == "linear") return ModelKind::Linear;
    if (s == "quadratic") return ModelKind::Quadratic;
    throw Error(ErrorCode::InvalidArgument, "unknown model '" + s + "'");
}

std::size_t minimum_waves(ModelKind kind) {
    switch (kind) {
    case ModelKind::Full: return 6;
    case ModelKind::Reduced: return 5;
    case ModelKind::Linear: return 3;
    case ModelKind::Quadratic: return 4;
    }
    return 6;
}

ParameterLayout ParameterLayout::of(ModelKind kind, int covariates) {
    ParameterLayout l;
    l.kind = kind;
    l.covariates = covariates;
    switch (kind) {
    case ModelKind::Full: l.factors = 4; l.means = 3; l.knot = true; break;
    case ModelKind::Reduced: l.factors = 3; l.means = 3; l.knot = true; break;
    case ModelKind::Linear: l.factors = 2; l.means = 2; l.knot = false; break;
    case ModelKind::Quadratic: l.factors = 3; l.means = 3; l.knot = false; break;
    }
    return l;
}

int ParameterLayout::psiIndex(int r, int c) const {
    if (r > c) std::swap(r, c);
    // Row-wise upper triangle: row r starts after sum_{k<r} (factors - k) cells.
    return psiOffset() + r * factors - r * (r - 1) / 2 + (c - r);
}

std::vector<std::string> ParameterLayout::factorNames() const {
    switch (kind) {
    case ModelKind::Full: return {"intercept", "slope1", "slope2", "knot"};
    case ModelKind::Reduced: return {"intercept", "slope1", "slope2"};
    case ModelKind::Linear: return {"intercept", "slope"};
    case ModelKind::Quadratic: return {"intercept", "linear", "quadratic"};
    }
    return {};
}

std::vector<std::string> ParameterLayout::names(bool interpretable) const {
    const bool piecewise = !interpretable && (kind == ModelKind::Full || kind == ModelKind::Reduced);
    const char* const* labels = kind == ModelKind::Full ? kFullLabels : kPolyLabels;
    const std::string suffix = piecewise ? "p" : "";
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (int k = 0; k < means; ++k) out.push_back(std::string("mu_eta") + labels[k] + suffix);
    if (knot) out.emplace_back("mu_gamma");
    for (int r = 0; r < factors; ++r)
        for (int c = r; c < factors; ++c) out.push_back(std::string("psi_") + labels[r] + labels[c] + suffix);
    for (int r = 0; r < factors; ++r)
        for (int c = 0; c < covariates; ++c)
            out.push_back("beta_x" + std::to_string(c + 1) + "_" + labels[r] + suffix);
    out.emplace_back("theta_eps");
    return out;
}

Matrix build_loadings(ModelKind kind, const Vector& t, double knot, double halfDiffMean) {
    switch (kind) {
    case ModelKind::Full: return build_loadings_full(t, knot, halfDiffMean);
    case ModelKind::Reduced: return build_loadings_reduced(t, knot);
    case ModelKind::Linear: {
        Matrix L(t.size(), 2);
        L.col(0).setOnes();
        L.col(1) = t;
        return L;
    }
    case ModelKind::Quadratic: {
        Matrix L(t.size(), 3);
        L.col(0).setOnes();
        L.col(1) = t;
        L.col(2) = t.array().square().matrix();
        return L;
    }
    }
    return {};
}

FimlObjective::FimlObjective(ModelKind kind, const LongitudinalDataset& centeredData, LikelihoodMode mode)
    : layout_(ParameterLayout::of(kind, static_cast<int>(centeredData.covariates()))),
      data_(centeredData.centeredCopy()),
      mode_(mode) {
    const auto c = static_cast<Eigen::Index>(data_.covariates());
    const auto n = static_cast<double>(data_.n());
    phi_ = c > 0 ? Matrix((data_.X().transpose() * data_.X()) / n) : Matrix(0, 0);
    if (mode_ == LikelihoodMode::Marginal && c > 0) {
        Eigen::LLT<Matrix> llt(phi_);
        if (llt.info() != Eigen::Success)
            throw Error(ErrorCode::DegenerateData,
                        "covariate covariance is singular; marginal mode needs non-degenerate covariates");
        double sum = 0.0;
        const Vector zero = Vector::Zero(c);
        for (Eigen::Index i = 0; i < data_.X().rows(); ++i)
            sum += logpdf_from(llt, data_.X().row(i).transpose() - zero);
        xTerm_ = sum;
    }
}

double FimlObjective::value(std::span<const double> x) const { return evaluate(x, nullptr); }

double FimlObjective::valueAndGradient(std::span<const double> x, std::span<double> grad) const {
    if (grad.size() != x.size()) throw Error(ErrorCode::InvalidArgument, "gradient buffer size mismatch");
    return evaluate(x, grad.data());
}

double FimlObjective::evaluate(std::span<const double> xs, double* grad) const {
    const ParameterLayout& lay = layout_;
    if (static_cast<int>(xs.size()) != lay.size())
        throw Error(ErrorCode::InvalidArgument, "parameter vector has the wrong length");
    const int K = lay.factors;
    const int C = lay.covariates;
    const auto J = static_cast<Eigen::Index>(data_.waves());
    constexpr double inf = std::numeric_limits<double>::infinity();

    Vector mean = Vector::Zero(K);
    for (int k = 0; k < lay.means; ++k) mean(k) = xs[static_cast<std::size_t>(k)];
    const double knot = lay.knot ? xs[static_cast<std::size_t>(lay.knotIndex())] : 0.0;
    const double halfDiff = lay.kind == ModelKind::Full ? mean(2) : 0.0;
    Matrix Psi(K, K);
    for (int r = 0; r < K; ++r)
        for (int c = r; c < K; ++c) Psi(r, c) = Psi(c, r) = xs[static_cast<std::size_t>(lay.psiIndex(r, c))];
    Matrix B(K, C);
    for (int r = 0; r < K; ++r)
        for (int c = 0; c < C; ++c) B(r, c) = xs[static_cast<std::size_t>(lay.bOffset() + r * C + c)];
    const double logTheta = xs[static_cast<std::size_t>(lay.logThetaIndex())];
    const double theta = std::exp(logTheta);
    if (!std::isfinite(theta) || !(theta > 0.0)) return inf;

    Vector g;
    if (grad) g = Vector::Zero(lay.size());

    Matrix Sigma(J, J);
    Eigen::LLT<Matrix> llt(J);
    Matrix Sinv(J, J);
    Matrix W(J, J);
    const Matrix I = Matrix::Identity(J, J);
    Vector eta(K);
    Vector r(J);
    Vector v(J);
    Matrix WL(J, K);
    Matrix M(K, K);
    Matrix N(J, K);
    Vector Ltv(K);

    double ll = 0.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(data_.n()); ++i) {
        const Vector t = data_.T().row(i).transpose();
        const Matrix L = build_loadings(lay.kind, t, knot, halfDiff);
        eta = mean;
        if (C > 0) eta.noalias() += B * data_.X().row(i).transpose();
        r = data_.Y().row(i).transpose();
        r.noalias() -= L * eta;
        Sigma.noalias() = L * Psi * L.transpose();
        Sigma.diagonal().array() += theta;
        llt.compute(Sigma);
        if (llt.info() != Eigen::Success) return inf;
        const auto& LL = llt.matrixLLT();
        double logdet = 0.0;
        for (Eigen::Index k = 0; k < J; ++k) {
            const double d = LL(k, k);
            if (!(d > 0.0)) return inf;
            logdet += std::log(d);
        }
        v = llt.solve(r);
        ll += -0.5 * static_cast<double>(J) * kLog2Pi - logdet - 0.5 * r.dot(v);
        if (!grad) continue;

        Sinv = llt.solve(I);
        W.noalias() = v * v.transpose();
        W -= Sinv;
        Ltv.noalias() = L.transpose() * v;
        WL.noalias() = W * L;
        M.noalias() = L.transpose() * WL;

        for (int k = 0; k < lay.means; ++k) g(k) += Ltv(k);
        for (int a = 0; a < K; ++a) {
            g(lay.psiIndex(a, a)) += 0.5 * M(a, a);
            for (int b = a + 1; b < K; ++b) g(lay.psiIndex(a, b)) += M(a, b);
        }
        for (int a = 0; a < K; ++a)
            for (int c = 0; c < C; ++c) g(lay.bOffset() + a * C + c) += Ltv(a) * data_.X()(i, c);
        g(lay.logThetaIndex()) += 0.5 * theta * W.trace();

        if (lay.knot) {
            // dℓ/dΛ_jk = (WΛΨ)_jk + v_j η_k; the loadings move with the knot
            // through (t - κ) and |t - κ|, and for the full model the fourth
            // column also moves with the mean half-difference.
            N.noalias() = WL * Psi;
            double dKnot = 0.0;
            double dHalf = 0.0;
            for (Eigen::Index j = 0; j < J; ++j) {
                const double s = sign0(t(j) - knot);
                const double dl1 = N(j, 1) + v(j) * eta(1);
                const double dl2 = N(j, 2) + v(j) * eta(2);
                dKnot += -dl1 - s * dl2;
                if (lay.kind == ModelKind::Full) dHalf += (-1.0 - s) * (N(j, 3) + v(j) * eta(3));
            }
            g(lay.knotIndex()) += dKnot;
            if (lay.kind == ModelKind::Full) g(2) += dHalf;
        }
    }
    ll += xTerm_;
    if (grad) {
        for (int k = 0; k < lay.size(); ++k) grad[k] = -g(k);
    }
    return -ll;
}

}  // namespace pwlgm
