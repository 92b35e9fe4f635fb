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

namespace pwlgm {

// Mapping between the interpretable growth factors (eta0, eta1, eta2, gamma)
// and the estimable ones (value at the knot, mean slope, half-difference,
// knot deviation). Means move through f/h; covariances and path coefficients
// through the Jacobian sandwich. All covariate-dependent transforms assume
// centered covariates.

/// f applied to a mean vector: (m0 + m3*m1, (m1+m2)/2, (m2-m1)/2, 0).
Vector4 f_mean(const Vector4& mu);

/// h applied to an estimable mean vector, with knotMean the knot mean.
Vector4 h_mean(const Vector4& muPrime, double knotMean);

/// Jacobian of f at the original-space mean.
Matrix4 jac_f(const Vector4& mu);

enum class InverseJacobian {
    Displayed,     // entry (0,3) is 0; matches the cell-wise expressions
    ExactInverse,  // inverse of jac_f, entry (0,3) is -(m1' - m2')
};

/// Jacobian used to map estimable-space covariances back. muPrime(3) must hold
/// the knot mean.
Matrix4 jac_h(const Vector4& muPrime, InverseJacobian variant = InverseJacobian::Displayed);

ReparamParams to_reparam(const OriginalParams& theta);

OriginalParams from_reparam(const ReparamParams& thetaPrime,
                            InverseJacobian variant = InverseJacobian::Displayed);

/// Independent route to from_reparam(Displayed): every mean and covariance cell
/// written out as a scalar polynomial in the knot mean.
OriginalParams from_reparam_cellwise(const ReparamParams& thetaPrime);

/// Fixed-knot model: first three entries of h and the upper-left 3x3 block of
/// jac_h, with the fixed knot in place of the knot mean.
ReducedOriginalParams reduce_transform(const ReducedParams& thetaPrime);

/// Inverse direction of reduce_transform.
ReducedParams reduce_to_reparam(const ReducedOriginalParams& theta);

}  // namespace pwlgm
