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

#include "pwlgm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pwlgm {

const char* to_string(BfgsStatus status) {
    switch (status) {
    case BfgsStatus::Gradient: return "gradient";
    case BfgsStatus::RelativeChange: return "relative-change";
    case BfgsStatus::MaxIterations: return "max-iterations";
    case BfgsStatus::LineSearchFailed: return "line-search-failed";
    case BfgsStatus::NonFiniteStart: return "non-finite-start";
    }
    return "unknown";
}

namespace {

struct Point {
    double alpha = 0.0;
    double f = 0.0;
    double slope = 0.0;  // directional derivative
    Vector x;
    Vector g;
};

class LineSearch {
public:
    LineSearch(const ObjectiveFn& fn, int& evaluations) : fn_(fn), evals_(evaluations) {}

    Point at(const Vector& x0, const Vector& dir, double alpha) {
        Point p;
        p.alpha = alpha;
        p.x = x0 + alpha * dir;
        p.g.resize(x0.size());
        p.f = fn_(p.x, p.g);
        ++evals_;
        p.slope = std::isfinite(p.f) ? p.g.dot(dir) : std::numeric_limits<double>::quiet_NaN();
        return p;
    }

    // Nocedal & Wright, algorithms 3.5/3.6, with bisection-safeguarded cubic
    // interpolation. Non-finite trial values count as "too far".
    bool search(const Point& start, const Vector& dir, double alpha1, Point& out) {
        constexpr double c1 = 1e-4;
        constexpr double c2 = 0.9;
        constexpr int kMaxBracket = 40;
        Point prev = start;
        double alpha = alpha1;
        for (int it = 0; it < kMaxBracket; ++it) {
            Point cur = at(start.x, dir, alpha);
            if (!std::isfinite(cur.f) || cur.f > start.f + c1 * alpha * start.slope ||
                (it > 0 && cur.f >= prev.f)) {
                return zoom(start, dir, prev, cur, out);
            }
            if (std::abs(cur.slope) <= -c2 * start.slope) {
                out = std::move(cur);
                return true;
            }
            if (cur.slope >= 0.0) return zoom(start, dir, cur, prev, out);
            prev = std::move(cur);
            alpha *= 2.0;
        }
        return false;
    }

private:
    bool zoom(const Point& start, const Vector& dir, Point lo, Point hi, Point& out) {
        constexpr double c1 = 1e-4;
        constexpr double c2 = 0.9;
        constexpr int kMaxZoom = 60;
        for (int it = 0; it < kMaxZoom; ++it) {
            const double a = std::min(lo.alpha, hi.alpha);
            const double b = std::max(lo.alpha, hi.alpha);
            double trial = 0.5 * (lo.alpha + hi.alpha);
            if (std::isfinite(hi.f) && std::isfinite(hi.slope)) {
                // Cubic through (lo, hi) function values and slopes.
                const double d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (lo.alpha - hi.alpha);
                const double disc = d1 * d1 - lo.slope * hi.slope;
                if (disc >= 0.0) {
                    const double sgn = hi.alpha > lo.alpha ? 1.0 : -1.0;
                    const double d2 = sgn * std::sqrt(disc);
                    const double cubic =
                        hi.alpha - (hi.alpha - lo.alpha) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
                    const double margin = 0.1 * (b - a);
                    if (std::isfinite(cubic) && cubic > a + margin && cubic < b - margin) trial = cubic;
                }
            }
            if (b - a < 1e-16 * std::max(1.0, b)) break;
            Point cur = at(start.x, dir, trial);
            if (!std::isfinite(cur.f) || cur.f > start.f + c1 * trial * start.slope || cur.f >= lo.f) {
                hi = std::move(cur);
            } else {
                if (std::abs(cur.slope) <= -c2 * start.slope) {
                    out = std::move(cur);
                    return true;
                }
                if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
        }
        // Accept the best sufficient-decrease point if one exists.
        if (lo.alpha > 0.0 && std::isfinite(lo.f) && lo.f < start.f) {
            out = std::move(lo);
            return true;
        }
        return false;
    }

    const ObjectiveFn& fn_;
    int& evals_;
};

}  // namespace

BfgsResult minimize_bfgs(const ObjectiveFn& fn, const Vector& x0, const BfgsOptions& opt,
                         const Vector& invHessDiag) {
    const Eigen::Index p = x0.size();
    BfgsResult res;
    LineSearch ls(fn, res.evaluations);

    Point cur;
    cur.x = x0;
    cur.g.resize(p);
    cur.f = fn(cur.x, cur.g);
    ++res.evaluations;
    res.x = cur.x;
    res.f = cur.f;
    res.grad = cur.g;
    if (!std::isfinite(cur.f) || !cur.g.allFinite()) {
        res.status = BfgsStatus::NonFiniteStart;
        return res;
    }

    const bool seeded = invHessDiag.size() == p;
    Matrix H0 = Matrix::Identity(p, p);
    if (seeded) H0.diagonal() = invHessDiag;
    Matrix H = H0;
    bool rescale = !seeded;
    int failures = 0;

    for (int iter = 0; iter < opt.maxIter; ++iter) {
        res.iterations = iter;
        if (cur.g.lpNorm<Eigen::Infinity>() <= opt.gradTol) {
            res.status = BfgsStatus::Gradient;
            break;
        }
        Vector dir = -H * cur.g;
        double slope = dir.dot(cur.g);
        if (!(slope < 0.0)) {
            H = H0;
            dir = -H * cur.g;
            slope = dir.dot(cur.g);
        }
        cur.slope = slope;
        cur.alpha = 0.0;
        Point next;
        double alpha1 = 1.0;
        if (iter == 0 && !seeded) alpha1 = std::min(1.0, 1.0 / std::max(1e-12, cur.g.lpNorm<Eigen::Infinity>()));
        if (!ls.search(cur, dir, alpha1, next)) {
            ++failures;
            if (failures >= 2) {
                res.status = BfgsStatus::LineSearchFailed;
                break;
            }
            H = H0;
            continue;
        }
        failures = 0;
        const Vector s = next.x - cur.x;
        const Vector y = next.g - cur.g;
        const double sy = s.dot(y);
        const double fOld = cur.f;
        cur = std::move(next);
        res.iterations = iter + 1;

        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (rescale) {
                H *= sy / y.squaredNorm();
                H0 = H;
                rescale = false;
            }
            const double rho = 1.0 / sy;
            const Vector Hy = H * y;
            const double yHy = y.dot(Hy);
            // H+ = (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ, expanded.
            H.noalias() += ((1.0 + rho * yHy) * rho) * (s * s.transpose());
            H.noalias() -= rho * (Hy * s.transpose() + s * Hy.transpose());
        }

        if (cur.g.lpNorm<Eigen::Infinity>() <= opt.gradTol) {
            res.status = BfgsStatus::Gradient;
            break;
        }
        if (std::abs(fOld - cur.f) <= opt.relFTol * std::max(1.0, std::abs(cur.f))) {
            res.status = BfgsStatus::RelativeChange;
            break;
        }
        if (iter + 1 == opt.maxIter) res.status = BfgsStatus::MaxIterations;
    }
    res.x = cur.x;
    res.f = cur.f;
    res.grad = cur.g;
    return res;
}

}  // namespace pwlgm
