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

#include <functional>
#include <string>

namespace pwlgm {

/// Returns f(x) and writes the gradient into g. May return +infinity to reject
/// a point (e.g. outside the region where the model is defined).
using ObjectiveFn = std::function<double(const Vector& x, Vector& g)>;

struct BfgsOptions {
    int maxIter = 2000;
    double gradTol = 1e-6;   // max-norm of the gradient
    double relFTol = 1e-10;  // |f_k - f_{k+1}| / max(1, |f_{k+1}|)
};

enum class BfgsStatus { Gradient, RelativeChange, MaxIterations, LineSearchFailed, NonFiniteStart };

const char* to_string(BfgsStatus status);

struct BfgsResult {
    Vector x;
    double f = 0.0;
    Vector grad;
    int iterations = 0;
    int evaluations = 0;
    BfgsStatus status = BfgsStatus::MaxIterations;

    bool converged() const { return status == BfgsStatus::Gradient || status == BfgsStatus::RelativeChange; }
};

/// Quasi-Newton minimization with a strong-Wolfe line search. invHessDiag, if
/// non-empty, seeds the inverse Hessian approximation; otherwise the identity is
/// rescaled after the first step. Fully deterministic.
BfgsResult minimize_bfgs(const ObjectiveFn& fn, const Vector& x0, const BfgsOptions& options,
                         const Vector& invHessDiag = Vector());

}  // namespace pwlgm
