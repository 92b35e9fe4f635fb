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

#include "pwlgm/estimation.hpp"
#include "pwlgm/simgen.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pwlgm {

// One replication. `estimates` is the interpretable-space table the metrics
// are computed from: the full fit's, or the reduced fit's when the full fit
// was improper and got replaced.
struct RepOutcome {
    std::uint64_t index = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    bool usedReduced = false;
    int attemptsToConverge = 0;
    ImproperFlags improper;  // flags of the full fit
    std::vector<ParamEstimate> estimates;
    std::optional<FitResult> fullFit;
    std::optional<FitResult> reducedFit;
};

/// Produces the outcome of replication `index` whose data stream is `seed`.
using Estimator =
    std::function<RepOutcome(const SimCondition& cond, std::uint64_t index, std::uint64_t seed, const FitOptions&)>;

/// Generates the data, fits the full model and applies the replacement rule:
/// a convergent full fit with improper flags is refitted with the reduced model.
RepOutcome run_replication(const SimCondition& cond, std::uint64_t index, std::uint64_t seed,
                           const FitOptions& options);

/// Harness self-test estimator: every estimate is truth * (1 + relativeShift)
/// with interval estimate ± halfWidth; always convergent.
Estimator truth_stub(double relativeShift = 0.0, double halfWidth = 1.0);

/// Interpretable-space population values keyed like ParamEstimate names.
std::vector<std::pair<std::string, double>> truth_table(const SimCondition& cond);

struct BiasValue {
    double value = 0.0;
    bool absolute = false;  // truth was zero: value is the plain bias
};

constexpr double kZeroTruth = 1e-8;

BiasValue metric_relative_bias(std::span<const double> estimates, double truth);
double metric_empirical_se(std::span<const double> estimates);
BiasValue metric_relative_rmse(std::span<const double> estimates, double truth);
double metric_coverage(std::span<const std::pair<double, double>> cis, double truth);
/// Monte Carlo standard error of the bias, sqrt(Var(θ̂) / S).
double metric_mc_se(double variance, int S);

struct ParamMetrics {
    std::string name;
    double truth = 0.0;
    int count = 0;          // replications that estimated this parameter
    int intervalCount = 0;  // ... and also produced an interval
    double mean = 0.0;
    BiasValue relativeBias;
    double empiricalSE = 0.0;
    BiasValue relativeRMSE;
    double coverage = 0.0;
    double mcSE = 0.0;
};

struct ImproperCounts {
    int negativeVariance = 0;
    int outOfRangeCorrelation = 0;
    int any = 0;
};

// Bookkeeping line for every drawn replication.
struct RepRecord {
    std::uint64_t index = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    bool usedReduced = false;
    int attempts = 0;
    ImproperFlags improper;
};

struct MetricsReport {
    SimCondition condition;
    std::uint64_t masterSeed = 0;
    int requested = 0;
    int attempted = 0;  // draws up to and including the last kept one
    int converged = 0;
    int usedReduced = 0;
    bool complete = false;  // false if maxDraws ran out first
    ImproperCounts improper;
    std::vector<ParamMetrics> params;
    std::vector<RepRecord> replications;  // all draws up to `attempted`
};

struct HarnessOptions {
    FitOptions fit;
    std::uint64_t masterSeed = 20260101;
    int workers = 1;
    int maxDraws = 0;      // 0: 20 * S
    Estimator estimator;   // empty: run_replication
};

/// Metrics over a fixed list of kept outcomes (all assumed convergent).
MetricsReport compute_metrics(const SimCondition& cond, std::span<const RepOutcome> kept);

/// Runs replications 0, 1, 2, ... until S convergent ones are found and keeps
/// exactly the first S convergent in index order, whatever the worker count.
MetricsReport run_condition(const SimCondition& cond, int S, const HarnessOptions& options);

struct Summary {
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
    int count = 0;
};

Summary summarize(std::vector<double> values);

struct GridSummaryRow {
    std::string name;
    Summary relativeBias;
    Summary empiricalSE;
    Summary relativeRMSE;
    Summary coverage;
    Summary mcSE;
};

/// Median and range of each metric across conditions, per parameter, in the
/// order parameters first appear.
std::vector<GridSummaryRow> summarize_grid(std::span<const MetricsReport> reports);

}  // namespace pwlgm
