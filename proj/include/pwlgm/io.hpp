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
#include "pwlgm/harness.hpp"
#include "pwlgm/simgen.hpp"
#include "pwlgm/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pwlgm {

using Json = nlohmann::ordered_json;

// ---- CSV -------------------------------------------------------------------
//
// Wide layout: header `id,y1..yJ,t1..tJ,x1..xc`, one row per individual.
// Long layout: header `id,t,y[,x1..xc]`, one row per measurement, rows of an
// individual contiguous and in time order; covariates must be constant within
// an individual.

/// %.17g text, which reads back to exactly the same double.
std::string format_number(double v);

LongitudinalDataset read_wide_csv(std::istream& in, const std::string& source = "<input>");
LongitudinalDataset read_long_csv(std::istream& in, const std::string& source = "<input>");
LongitudinalDataset read_csv_file(const std::string& path, bool longLayout = false);

void write_wide_csv(std::ostream& out, const LongitudinalDataset& data);

// ---- JSON ------------------------------------------------------------------

/// {rows, cols, data} with data row-major.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& what);

Json params_to_json(const OriginalParams& p);
Json params_to_json(const ReparamParams& p);
OriginalParams original_from_json(const Json& j);
ReparamParams reparam_from_json(const Json& j);

/// Configuration shared by the command-line tools. Unknown keys are rejected.
struct RunConfig {
    std::string model = "full";  // full, reduced, linear, quadratic, compare
    LikelihoodMode mode = LikelihoodMode::Marginal;
    double ciLevel = 0.95;
    int maxAttempts = 10;
    std::uint64_t masterSeed = 20260101;
    SimCondition condition;
    std::vector<SimCondition> grid;  // empty: just `condition`
    int workers = 1;
    int S = 100;
    int maxDraws = 0;
    std::string estimator = "fit";  // "fit" or "truth" (harness self-test stub)

    FitOptions fitOptions() const;
};

RunConfig config_from_json(const Json& j);
RunConfig read_config_file(const std::string& path);

/// Canonical form of everything that affects results; the worker count is left
/// out because it never changes them.
Json config_to_json(const RunConfig& c);
std::string config_hash(const RunConfig& c);

Json condition_to_json(const SimCondition& c);
SimCondition condition_from_json(const Json& j);

Json fit_report_json(const FitResult& fit, const RunConfig& config);
Json comparison_json(const std::vector<ComparisonRow>& rows, const RunConfig& config);
Json metrics_report_json(const MetricsReport& report);
Json mc_output_json(const std::vector<MetricsReport>& reports, const RunConfig& config);

/// One row per parameter per condition.
void write_metrics_csv(std::ostream& out, const std::vector<MetricsReport>& reports);

/// One row per drawn replication per condition.
void write_replications_csv(std::ostream& out, const std::vector<MetricsReport>& reports);

}  // namespace pwlgm
