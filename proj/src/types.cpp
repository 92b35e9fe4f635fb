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

#include "pwlgm/types.hpp"

#include <cmath>

namespace pwlgm {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::Identification: return "Identification";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::NonPDCovariance: return "NonPDCovariance";
    case ErrorCode::SingularInformation: return "SingularInformation";
    case ErrorCode::NonPSDJoint: return "NonPSDJoint";
    case ErrorCode::InvalidCondition: return "InvalidCondition";
    case ErrorCode::TooFewReps: return "TooFewReps";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

const char* to_string(LikelihoodMode mode) {
    return mode == LikelihoodMode::Marginal ? "marginal" : "conditional";
}

LikelihoodMode likelihood_mode_from_string(const std::string& s) {
    if (s == "marginal") return LikelihoodMode::Marginal;
    if (s == "conditional") return LikelihoodMode::Conditional;
    throw Error(ErrorCode::InvalidArgument, "unknown likelihood mode '" + s + "'");
}

LongitudinalDataset::LongitudinalDataset(Matrix Y, Matrix T, Matrix X, std::vector<std::string> ids)
    : Y_(std::move(Y)), T_(std::move(T)), X_(std::move(X)), ids_(std::move(ids)) {
    if (Y_.rows() < 1) throw Error(ErrorCode::InvalidData, "dataset needs at least one individual");
    if (T_.rows() != Y_.rows() || T_.cols() != Y_.cols())
        throw Error(ErrorCode::InvalidData, "outcome and time matrices differ in shape");
    if (X_.rows() != Y_.rows()) {
        if (X_.size() == 0) {
            X_.resize(Y_.rows(), 0);
        } else {
            throw Error(ErrorCode::InvalidData, "covariate matrix row count differs from outcomes");
        }
    }
    if (!ids_.empty() && ids_.size() != static_cast<std::size_t>(Y_.rows()))
        throw Error(ErrorCode::InvalidData, "id column length differs from outcomes");
    if (ids_.empty()) {
        ids_.reserve(static_cast<std::size_t>(Y_.rows()));
        for (Eigen::Index i = 0; i < Y_.rows(); ++i) ids_.push_back(std::to_string(i + 1));
    }
    if (!Y_.allFinite() || !T_.allFinite() || !X_.allFinite())
        throw Error(ErrorCode::InvalidData, "dataset contains missing or non-finite cells");
    for (Eigen::Index i = 0; i < T_.rows(); ++i) {
        for (Eigen::Index j = 1; j < T_.cols(); ++j) {
            if (!(T_(i, j) > T_(i, j - 1))) {
                throw Error(ErrorCode::InvalidData,
                            "measurement occasions of individual " + ids_[static_cast<std::size_t>(i)] +
                                " are not strictly increasing at wave " + std::to_string(j + 1));
            }
        }
    }
}

LongitudinalDataset LongitudinalDataset::centeredCopy() const {
    LongitudinalDataset out = *this;
    if (centered_) return out;
    out.xMeans_ = X_.colwise().mean().transpose();
    if (X_.cols() > 0) out.X_.rowwise() -= out.xMeans_.transpose();
    out.centered_ = true;
    return out;
}

LongitudinalDataset LongitudinalDataset::permuted(const std::vector<std::size_t>& order) const {
    if (order.size() != n()) throw Error(ErrorCode::InvalidArgument, "permutation length mismatch");
    LongitudinalDataset out = *this;
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto src = static_cast<Eigen::Index>(order[r]);
        const auto dst = static_cast<Eigen::Index>(r);
        out.Y_.row(dst) = Y_.row(src);
        out.T_.row(dst) = T_.row(src);
        out.X_.row(dst) = X_.row(src);
        out.ids_[r] = ids_[order[r]];
    }
    return out;
}

}  // namespace pwlgm
