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

#include "pwlgm/estimation.hpp"

#include "pwlgm/model.hpp"
#include "pwlgm/optimizer.hpp"
#include "pwlgm/reparam.hpp"
#include "pwlgm/simgen.hpp"

#include <boost/math/distributions/normal.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace pwlgm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t at(int k) { return static_cast<std::size_t>(k); }

// Symmetric K x K block stored row-wise upper in the free vector.
Matrix read_psi(const ParameterLayout& lay, const Vector& free) {
    const int K = lay.factors;
    Matrix Psi(K, K);
    for (int r = 0; r < K; ++r)
        for (int c = r; c < K; ++c) Psi(r, c) = Psi(c, r) = free(lay.psiIndex(r, c));
    return Psi;
}

Matrix read_paths(const ParameterLayout& lay, const Vector& free) {
    const int K = lay.factors;
    const int C = lay.covariates;
    Matrix B(K, C);
    for (int r = 0; r < K; ++r)
        for (int c = 0; c < C; ++c) B(r, c) = free(lay.bOffset() + r * C + c);
    return B;
}

void write_psi(const ParameterLayout& lay, const Matrix& Psi, Vector& out) {
    for (int r = 0; r < lay.factors; ++r)
        for (int c = r; c < lay.factors; ++c) out(lay.psiIndex(r, c)) = Psi(r, c);
}

void write_paths(const ParameterLayout& lay, const Matrix& B, Vector& out) {
    const int C = lay.covariates;
    if (B.size() == 0) return;
    for (int r = 0; r < lay.factors; ++r)
        for (int c = 0; c < C; ++c) out(lay.bOffset() + r * C + c) = B(r, c);
}

// Natural-scale vector laid out like the free vector.
Vector layout_vector(const ParameterLayout& lay, const Vector& means, double knot, const Matrix& Psi,
                     const Matrix& B, double theta) {
    Vector out = Vector::Zero(lay.size());
    for (int k = 0; k < lay.means; ++k) out(k) = means(k);
    if (lay.knot) out(lay.knotIndex()) = knot;
    write_psi(lay, Psi, out);
    write_paths(lay, B, out);
    out(lay.logThetaIndex()) = theta;
    return out;
}

Vector estimable_vector(const ParameterLayout& lay, const Vector& free) {
    Vector out = free;
    out(lay.logThetaIndex()) = std::exp(free(lay.logThetaIndex()));
    return out;
}

// Ordinary least squares, empty optional if the design is rank deficient.
std::optional<Vector> least_squares(const Matrix& X, const Vector& y) {
    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    if (qr.rank() < X.cols()) return std::nullopt;
    return Vector(qr.solve(y));
}

// Difference quotient with the step actually realized in floating point.
struct Step {
    double plus;
    double minus;
    double width;
};

Step central_step(double x) {
    const double h = std::max(1e-4, 1e-4 * std::abs(x));
    const double p = x + h;
    const double m = x - h;
    return {p, m, p - m};
}

}  // namespace

void FitOptions::validate() const {
    if (maxAttempts < 1) throw Error(ErrorCode::InvalidArgument, "maxAttempts must be at least 1");
    if (!(ciLevel > 0.0 && ciLevel < 1.0)) throw Error(ErrorCode::InvalidArgument, "ciLevel must lie in (0, 1)");
    if (!(gradTol > 0.0) || !(relFTol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "invalid tolerances");
    if (maxIter < 1) throw Error(ErrorCode::InvalidArgument, "maxIter must be at least 1");
}

std::string ImproperFlag::label() const {
    if (kind == ImproperKind::NegativeVariance) return "negativeVariance(" + first + ")";
    return "outOfRangeCorrelation(" + first + "," + second + ")";
}

const ParamEstimate* FitResult::find(std::string_view name, bool originalSpace) const {
    const auto& table = originalSpace ? original : reparam;
    for (const auto& p : table)
        if (p.name == name) return &p;
    return nullptr;
}

ReparamParams unpack_full(const Vector& free, const Vector& muX, const Matrix& Phi) {
    const auto lay = ParameterLayout::of(ModelKind::Full, static_cast<int>(muX.size()));
    if (free.size() != lay.size()) throw Error(ErrorCode::InvalidArgument, "free vector has the wrong length");
    ReparamParams p;
    p.alphaPrime << free(0), free(1), free(2), free(lay.knotIndex());
    p.PsiPrime = read_psi(lay, free);
    p.BPrime = read_paths(lay, free);
    p.muX = muX;
    p.Phi = Phi;
    p.thetaEps = std::exp(free(lay.logThetaIndex()));
    return p;
}

ReducedParams unpack_reduced(const Vector& free, const Vector& muX, const Matrix& Phi) {
    const auto lay = ParameterLayout::of(ModelKind::Reduced, static_cast<int>(muX.size()));
    if (free.size() != lay.size()) throw Error(ErrorCode::InvalidArgument, "free vector has the wrong length");
    ReducedParams p;
    p.alphaPrime << free(0), free(1), free(2);
    p.gamma = free(lay.knotIndex());
    p.PsiPrime = read_psi(lay, free);
    p.BPrime = read_paths(lay, free);
    p.muX = muX;
    p.Phi = Phi;
    p.thetaEps = std::exp(free(lay.logThetaIndex()));
    return p;
}

BaselineParams unpack_baseline(ModelKind kind, const Vector& free, const Vector& muX, const Matrix& Phi) {
    if (kind != ModelKind::Linear && kind != ModelKind::Quadratic)
        throw Error(ErrorCode::InvalidArgument, "not a polynomial model");
    const auto lay = ParameterLayout::of(kind, static_cast<int>(muX.size()));
    if (free.size() != lay.size()) throw Error(ErrorCode::InvalidArgument, "free vector has the wrong length");
    BaselineParams p;
    p.alpha = free.head(lay.means);
    p.Psi = read_psi(lay, free);
    p.B = read_paths(lay, free);
    p.muX = muX;
    p.Phi = Phi;
    p.thetaEps = std::exp(free(lay.logThetaIndex()));
    return p;
}

Vector pack_full(const ReparamParams& p) {
    const auto lay = ParameterLayout::of(ModelKind::Full, static_cast<int>(p.covariates()));
    Vector v = layout_vector(lay, p.alphaPrime.head<3>(), p.alphaPrime(3), p.PsiPrime, p.BPrime, 0.0);
    v(lay.logThetaIndex()) = std::log(p.thetaEps);
    return v;
}

Vector pack_reduced(const ReducedParams& p) {
    const auto lay = ParameterLayout::of(ModelKind::Reduced, static_cast<int>(p.covariates()));
    Vector v = layout_vector(lay, p.alphaPrime, p.gamma, p.PsiPrime, p.BPrime, 0.0);
    v(lay.logThetaIndex()) = std::log(p.thetaEps);
    return v;
}

Vector interpretable_vector(ModelKind kind, const Vector& free, int covariates) {
    const auto lay = ParameterLayout::of(kind, covariates);
    const Vector muX = Vector::Zero(covariates);
    const Matrix Phi = Matrix::Identity(covariates, covariates);
    switch (kind) {
    case ModelKind::Full: {
        const OriginalParams o = from_reparam(unpack_full(free, muX, Phi));
        return layout_vector(lay, o.alpha.head<3>(), o.alpha(3), o.Psi, o.B, o.thetaEps);
    }
    case ModelKind::Reduced: {
        const ReducedOriginalParams o = reduce_transform(unpack_reduced(free, muX, Phi));
        return layout_vector(lay, o.alpha, o.gamma, o.Psi, o.B, o.thetaEps);
    }
    case ModelKind::Linear:
    case ModelKind::Quadratic: return estimable_vector(lay, free);
    }
    return {};
}

Vector initial_values(const LongitudinalDataset& data, ModelKind kind) {
    const auto lay = ParameterLayout::of(kind, static_cast<int>(data.covariates()));
    const Matrix& T = data.T();
    const Matrix& Y = data.Y();
    const double tmin = T.minCoeff();
    const double tmax = T.maxCoeff();
    if (!(tmax > tmin)) throw Error(ErrorCode::DegenerateData, "all measurement times coincide");
    const auto J = static_cast<Eigen::Index>(data.waves());
    const double spacing = (tmax - tmin) / static_cast<double>(std::max<Eigen::Index>(J - 1, 1));
    const bool piecewise = lay.knot;
    const double knot0 = 0.5 * (tmin + tmax);

    // Pooled means.
    Vector means(lay.means);
    if (piecewise) {
        std::vector<double> lt, ly, rt, ry;
        for (Eigen::Index i = 0; i < T.rows(); ++i)
            for (Eigen::Index j = 0; j < J; ++j) {
                if (T(i, j) <= knot0) {
                    lt.push_back(T(i, j));
                    ly.push_back(Y(i, j));
                } else {
                    rt.push_back(T(i, j));
                    ry.push_back(Y(i, j));
                }
            }
        auto line = [](const std::vector<double>& t, const std::vector<double>& y) {
            Matrix X(static_cast<Eigen::Index>(t.size()), 2);
            Vector v(static_cast<Eigen::Index>(y.size()));
            for (std::size_t k = 0; k < t.size(); ++k) {
                X(static_cast<Eigen::Index>(k), 0) = 1.0;
                X(static_cast<Eigen::Index>(k), 1) = t[k];
                v(static_cast<Eigen::Index>(k)) = y[k];
            }
            auto b = least_squares(X, v);
            if (!b) throw Error(ErrorCode::DegenerateData, "too few distinct time points on one side of the knot");
            return *b;
        };
        const Vector left = line(lt, ly);
        const Vector right = line(rt, ry);
        const Vector4 alpha(left(0), left(1), right(1), knot0);
        means = f_mean(alpha).head<3>();
    } else {
        const Eigen::Index nObs = T.size();
        Matrix X(nObs, lay.means);
        Vector v(nObs);
        Eigen::Index row = 0;
        for (Eigen::Index i = 0; i < T.rows(); ++i)
            for (Eigen::Index j = 0; j < J; ++j, ++row) {
                X.row(row) = build_loadings(kind, T.row(i).segment(j, 1).transpose(), 0.0, 0.0).row(0);
                v(row) = Y(i, j);
            }
        auto b = least_squares(X, v);
        if (!b) throw Error(ErrorCode::DegenerateData, "too few distinct time points for the polynomial model");
        means = *b;
    }

    // Per-person fits on the model loadings at the starting knot give the
    // spread of the individual coefficients and the residual variance.
    const int Kfit = std::min(lay.factors, 3);
    std::vector<Vector> coefs;
    double rss = 0.0;
    std::size_t dof = 0;
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
        const Vector t = T.row(i).transpose();
        const Matrix L = build_loadings(piecewise ? ModelKind::Reduced : kind, t, knot0, 0.0).leftCols(Kfit);
        if (J <= Kfit) continue;
        auto b = least_squares(L, Y.row(i).transpose());
        if (!b) continue;
        coefs.push_back(*b);
        rss += (Y.row(i).transpose() - L * *b).squaredNorm();
        dof += static_cast<std::size_t>(J - Kfit);
    }
    const double yVar = std::max((Y.array() - Y.mean()).square().mean(), 1e-8);
    double theta = dof > 0 ? rss / static_cast<double>(dof) : 0.1 * yVar;
    theta = std::max(theta, 1e-4 * yVar);

    Vector diag = Vector::Constant(lay.factors, 0.0);
    if (coefs.size() >= 2) {
        Vector mean = Vector::Zero(Kfit);
        for (const auto& b : coefs) mean += b;
        mean /= static_cast<double>(coefs.size());
        for (const auto& b : coefs) diag.head(Kfit) += (b - mean).array().square().matrix();
        diag.head(Kfit) /= static_cast<double>(coefs.size() - 1);
    }
    for (int k = 0; k < Kfit; ++k) diag(k) = std::max(diag(k), 1e-3 * theta);
    if (kind == ModelKind::Full) diag(3) = 0.04 * spacing * spacing;

    const Matrix Psi = diag.asDiagonal();
    const Matrix B = Matrix::Zero(lay.factors, lay.covariates);
    Vector free = layout_vector(lay, means, knot0, Psi, B, 0.0);
    free(lay.logThetaIndex()) = std::log(theta);
    return free;
}

Vector jittered_start(const Vector& start, ModelKind kind, int covariates, std::uint64_t seed, int attempt) {
    if (attempt <= 1) return start;
    const auto lay = ParameterLayout::of(kind, covariates);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::uniform_real_distribution<double> scale(0.8, 1.2);
    Vector out = start;
    for (int k = 0; k < lay.size(); ++k) {
        const double u = scale(rng);
        // θε is stored on the log scale; jitter it on its natural scale.
        if (k == lay.logThetaIndex())
            out(k) += std::log(u);
        else
            out(k) *= u;
    }
    return out;
}

namespace {

void fill_tables(FitResult& fit, const ParameterLayout& lay, const Vector& seReparam, const Vector& seOriginal,
                 double level) {
    const Vector est = estimable_vector(lay, fit.optimum);
    const Vector orig = interpretable_vector(fit.model, fit.optimum, lay.covariates);
    const auto namesP = lay.names(false);
    const auto namesO = lay.names(true);
    fit.reparam.clear();
    fit.original.clear();
    for (int k = 0; k < lay.size(); ++k) {
        ParamEstimate p{namesP[at(k)], est(k)};
        ParamEstimate o{namesO[at(k)], orig(k)};
        if (seReparam.size() == lay.size() && std::isfinite(seReparam(k))) {
            p.se = seReparam(k);
            std::tie(p.ciLow, p.ciHigh) = wald_ci(p.estimate, p.se, level);
        }
        if (seOriginal.size() == lay.size() && std::isfinite(seOriginal(k))) {
            o.se = seOriginal(k);
            std::tie(o.ciLow, o.ciHigh) = wald_ci(o.estimate, o.se, level);
        }
        fit.reparam.push_back(std::move(p));
        fit.original.push_back(std::move(o));
    }
}

FitResult assemble(ModelKind kind, const FimlObjective& obj, const BfgsResult& best, int attempts,
                   const LongitudinalDataset& data, const FitOptions& options) {
    const auto& lay = obj.layout();
    const int C = lay.covariates;
    FitResult fit;
    fit.model = kind;
    fit.mode = options.mode;
    fit.optimum = best.x;
    fit.covariateMeans = obj.data().covariateMeans();
    if (fit.covariateMeans.size() != C) fit.covariateMeans = data.X().colwise().mean().transpose();
    const Vector muX = Vector::Zero(C);
    const Matrix& Phi = obj.covariateCovariance();
    switch (kind) {
    case ModelKind::Full: {
        const ReparamParams p = unpack_full(best.x, muX, Phi);
        fit.thetaPrime = p;
        fit.theta = from_reparam(p);
        break;
    }
    case ModelKind::Reduced: {
        const ReducedParams p = unpack_reduced(best.x, muX, Phi);
        fit.thetaPrime = p;
        fit.theta = reduce_transform(p);
        break;
    }
    case ModelKind::Linear:
    case ModelKind::Quadratic: {
        const BaselineParams p = unpack_baseline(kind, best.x, muX, Phi);
        fit.thetaPrime = p;
        fit.theta = p;
        break;
    }
    }
    fit.loglik = -best.f;
    fit.n = static_cast<int>(data.n());
    // The covariate moments are estimated too when they enter the likelihood.
    fit.nParams = lay.size() + (options.mode == LikelihoodMode::Marginal ? C + C * (C + 1) / 2 : 0);
    const auto ic = information_criteria(fit.loglik, fit.nParams, fit.n);
    fit.aic = ic.aic;
    fit.bic = ic.bic;
    fit.residualVar = std::exp(best.x(lay.logThetaIndex()));
    fit.converged = best.converged();
    fit.attempts = attempts;
    fit.iterations = best.iterations;
    fit.stopReason = to_string(best.status);
    fill_tables(fit, lay, Vector(), Vector(), options.ciLevel);
    fit.improperFlags = diagnose_improper(fit);
    return fit;
}

// Inverse-Hessian diagonal from one-sided differences of the gradient, so the
// first quasi-Newton steps see the very different scales of the parameters.
Vector diagonal_preconditioner(const FimlObjective& obj, const Vector& x) {
    const Eigen::Index p = x.size();
    Vector g0(p), g1(p);
    const double f0 = obj.valueAndGradient({x.data(), at(static_cast<int>(p))}, {g0.data(), at(static_cast<int>(p))});
    Vector d = Vector::Ones(p);
    if (!std::isfinite(f0)) return d;
    for (Eigen::Index k = 0; k < p; ++k) {
        Vector xk = x;
        const double h = std::max(1e-4, 1e-4 * std::abs(x(k)));
        xk(k) += h;
        const double f1 = obj.valueAndGradient({xk.data(), at(static_cast<int>(p))}, {g1.data(), at(static_cast<int>(p))});
        if (!std::isfinite(f1)) continue;
        const double hkk = (g1(k) - g0(k)) / (xk(k) - x(k));
        if (std::isfinite(hkk) && std::abs(hkk) > 1e-12) d(k) = 1.0 / std::abs(hkk);
    }
    return d;
}

}  // namespace

FitResult fit_model(ModelKind kind, const LongitudinalDataset& data, const FitOptions& options) {
    options.validate();
    if (data.waves() < minimum_waves(kind))
        throw Error(ErrorCode::Identification, std::string("the ") + to_string(kind) + " model needs at least " +
                                                   std::to_string(minimum_waves(kind)) + " waves, got " +
                                                   std::to_string(data.waves()));
    const LongitudinalDataset centered = data.centeredCopy();
    const FimlObjective obj(kind, centered, options.mode);
    const auto& lay = obj.layout();
    const Vector start = initial_values(centered, kind);
    const auto p = static_cast<std::size_t>(lay.size());

    const ObjectiveFn fn = [&obj, p](const Vector& x, Vector& g) {
        g.resize(x.size());
        return obj.valueAndGradient({x.data(), p}, {g.data(), p});
    };
    BfgsOptions bo;
    bo.maxIter = options.maxIter;
    bo.gradTol = options.gradTol;
    bo.relFTol = options.relFTol;

    std::optional<BfgsResult> best;
    int attempt = 1;
    for (; attempt <= options.maxAttempts; ++attempt) {
        const Vector x0 = jittered_start(start, kind, lay.covariates, options.seed, attempt);
        const Vector precond = diagonal_preconditioner(obj, x0);
        BfgsResult r = minimize_bfgs(fn, x0, bo, precond);
        const bool better = !best || (r.converged() && !best->converged()) ||
                            (r.converged() == best->converged() && r.f < best->f);
        if (better) best = std::move(r);
        if (best->converged()) break;
    }
    FitResult fit = assemble(kind, obj, *best, std::min(attempt, options.maxAttempts), data, options);
    if (fit.converged) fit = standard_errors(std::move(fit), data, options.ciLevel);
    return fit;
}

FitResult fit_full(const LongitudinalDataset& data, const FitOptions& options) {
    return fit_model(ModelKind::Full, data, options);
}

FitResult fit_reduced(const LongitudinalDataset& data, const FitOptions& options) {
    return fit_model(ModelKind::Reduced, data, options);
}

FitResult fit_baseline(const LongitudinalDataset& data, BaselineForm form, const FitOptions& options) {
    return fit_model(form == BaselineForm::Linear ? ModelKind::Linear : ModelKind::Quadratic, data, options);
}

Matrix observed_information(const FimlObjective& objective, const Vector& x) {
    const Eigen::Index p = x.size();
    const auto sz = at(static_cast<int>(p));
    Matrix H(p, p);
    Vector gp(p), gm(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const Step s = central_step(x(k));
        Vector xp = x, xm = x;
        xp(k) = s.plus;
        xm(k) = s.minus;
        const double fp = objective.valueAndGradient({xp.data(), sz}, {gp.data(), sz});
        const double fm = objective.valueAndGradient({xm.data(), sz}, {gm.data(), sz});
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw Error(ErrorCode::SingularInformation, "information matrix needs points outside the admissible region");
        H.col(k) = (gp - gm) / s.width;
    }
    return 0.5 * (H + H.transpose());
}

FitResult standard_errors(FitResult fit, const LongitudinalDataset& data, double ciLevel) {
    const LongitudinalDataset centered = data.centeredCopy();
    const FimlObjective obj(fit.model, centered, fit.mode);
    const auto& lay = obj.layout();
    if (fit.optimum.size() != lay.size())
        throw Error(ErrorCode::InvalidArgument, "fit does not belong to this dataset");

    fit.seAvailable = false;
    fit.singularInformation = false;
    Matrix V;
    try {
        const Matrix H = observed_information(obj, fit.optimum);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
        const Vector& ev = eig.eigenvalues();
        const double top = ev.cwiseAbs().maxCoeff();
        if (!(ev.minCoeff() > 1e-10 * top))
            throw Error(ErrorCode::SingularInformation, "information matrix is singular or not positive definite");
        V = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularInformation) throw;
        fit.singularInformation = true;
        fill_tables(fit, lay, Vector(), Vector(), ciLevel);
        return fit;
    }

    // In marginal mode the means (and the knot) are located at the sample
    // covariate mean, so the sampling error of x̄ adds B'(Φ/n)B'ᵀ to their block.
    if (fit.mode == LikelihoodMode::Marginal && lay.covariates > 0) {
        const int C = lay.covariates;
        std::vector<std::pair<int, int>> loc;  // (free index, factor row)
        for (int k = 0; k < lay.means; ++k) loc.emplace_back(k, k);
        if (lay.knot && lay.factors > lay.means) loc.emplace_back(lay.knotIndex(), lay.factors - 1);
        Matrix Bsub(static_cast<Eigen::Index>(loc.size()), C);
        for (std::size_t a = 0; a < loc.size(); ++a)
            for (int c = 0; c < C; ++c)
                Bsub(static_cast<Eigen::Index>(a), c) = fit.optimum(lay.bOffset() + loc[a].second * C + c);
        const Matrix add = Bsub * obj.covariateCovariance() * Bsub.transpose() / static_cast<double>(centered.n());
        for (std::size_t a = 0; a < loc.size(); ++a)
            for (std::size_t b = 0; b < loc.size(); ++b)
                V(loc[a].first, loc[b].first) += add(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }

    // Estimable space: only θε differs from the free coordinates.
    const Eigen::Index p = lay.size();
    Vector seFree = V.diagonal().cwiseMax(0.0).cwiseSqrt();
    Vector seReparam = seFree;
    seReparam(lay.logThetaIndex()) *= std::exp(fit.optimum(lay.logThetaIndex()));

    // Interpretable space by the delta method on the free-to-interpretable map.
    Matrix Jac(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const Step s = central_step(fit.optimum(k));
        Vector xp = fit.optimum, xm = fit.optimum;
        xp(k) = s.plus;
        xm(k) = s.minus;
        Jac.col(k) = (interpretable_vector(fit.model, xp, lay.covariates) -
                      interpretable_vector(fit.model, xm, lay.covariates)) /
                     s.width;
    }
    const Matrix Vo = Jac * V * Jac.transpose();
    const Vector seOriginal = Vo.diagonal().cwiseMax(0.0).cwiseSqrt();

    fit.seAvailable = true;
    fill_tables(fit, lay, seReparam, seOriginal, ciLevel);
    return fit;
}

std::pair<double, double> wald_ci(double estimate, double se, double level) {
    if (!(se >= 0.0)) throw Error(ErrorCode::InvalidArgument, "standard error must be non-negative");
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidArgument, "confidence level must lie in (0, 1)");
    const boost::math::normal_distribution<double> z01;
    const double z = boost::math::quantile(z01, 0.5 * (1.0 + level));
    return {estimate - z * se, estimate + z * se};
}

ImproperFlags diagnose_improper(const FitResult& fit) {
    const Matrix Psi = std::visit(
        [](const auto& p) -> Matrix {
            if constexpr (requires { p.Psi; }) return p.Psi;
            return {};
        },
        fit.theta);
    const auto names = ParameterLayout::of(fit.model, 0).factorNames();
    ImproperFlags flags;
    const auto K = Psi.rows();
    for (Eigen::Index k = 0; k < K; ++k)
        if (Psi(k, k) < 0.0) flags.push_back({ImproperKind::NegativeVariance, names[static_cast<std::size_t>(k)], ""});
    for (Eigen::Index a = 0; a < K; ++a)
        for (Eigen::Index b = a + 1; b < K; ++b) {
            const double va = Psi(a, a);
            const double vb = Psi(b, b);
            if (!(va > 0.0 && vb > 0.0)) continue;
            if (std::abs(Psi(a, b)) > std::sqrt(va * vb))
                flags.push_back({ImproperKind::OutOfRangeCorrelation, names[static_cast<std::size_t>(a)],
                                 names[static_cast<std::size_t>(b)]});
        }
    return flags;
}

InformationCriteria information_criteria(double loglik, int p, int n) {
    if (p < 1) throw Error(ErrorCode::InvalidArgument, "parameter count must be at least 1");
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample size must be at least 1");
    return {-2.0 * loglik + 2.0 * p, -2.0 * loglik + p * std::log(static_cast<double>(n))};
}

std::vector<ComparisonRow> compare_models(const LongitudinalDataset& data, const FitOptions& options) {
    std::vector<ComparisonRow> rows;
    for (ModelKind kind : {ModelKind::Full, ModelKind::Reduced, ModelKind::Linear, ModelKind::Quadratic}) {
        if (data.waves() < minimum_waves(kind)) continue;
        const FitResult fit = fit_model(kind, data, options);
        rows.push_back({kind, -2.0 * fit.loglik, fit.aic, fit.bic, fit.nParams, fit.residualVar, fit.converged});
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ComparisonRow& a, const ComparisonRow& b) { return a.aic < b.aic; });
    return rows;
}

}  // namespace pwlgm
