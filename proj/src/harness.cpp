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

#include "pwlgm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

namespace pwlgm {

RepOutcome run_replication(const SimCondition& cond, std::uint64_t index, std::uint64_t seed,
                           const FitOptions& options) {
    RepOutcome out;
    out.index = index;
    out.seed = seed;
    FitOptions fo = options;
    fo.seed = seed;
    try {
        const GeneratedData gen = gen_dataset(cond, seed);
        FitResult full = fit_full(gen.data, fo);
        out.attemptsToConverge = full.attempts;
        out.improper = full.improperFlags;
        if (!full.converged) {
            out.fullFit = std::move(full);
            return out;
        }
        if (full.improperFlags.empty()) {
            out.converged = true;
            out.estimates = full.original;
            out.fullFit = std::move(full);
            return out;
        }
        FitResult reduced = fit_reduced(gen.data, fo);
        out.usedReduced = true;
        out.converged = reduced.converged;
        out.estimates = reduced.original;
        out.fullFit = std::move(full);
        out.reducedFit = std::move(reduced);
    } catch (const Error&) {
        // Numeric breakdown of this draw counts as non-convergence.
        out.converged = false;
    }
    return out;
}

std::vector<std::pair<std::string, double>> truth_table(const SimCondition& cond) {
    const OriginalParams t = condition_to_params(cond);
    const auto lay = ParameterLayout::of(ModelKind::Full, cond.covariates);
    const auto names = lay.names(true);
    std::vector<double> v;
    for (int k = 0; k < 3; ++k) v.push_back(t.alpha(k));
    v.push_back(t.alpha(3));
    for (int r = 0; r < 4; ++r)
        for (int c = r; c < 4; ++c) v.push_back(t.Psi(r, c));
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < cond.covariates; ++c) v.push_back(t.B(r, c));
    v.push_back(t.thetaEps);
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t k = 0; k < names.size(); ++k) out.emplace_back(names[k], v[k]);
    return out;
}

Estimator truth_stub(double relativeShift, double halfWidth) {
    return [relativeShift, halfWidth](const SimCondition& cond, std::uint64_t index, std::uint64_t seed,
                                      const FitOptions&) {
        RepOutcome out;
        out.index = index;
        out.seed = seed;
        out.converged = true;
        out.attemptsToConverge = 1;
        for (const auto& [name, truth] : truth_table(cond)) {
            const double e = truth * (1.0 + relativeShift);
            out.estimates.push_back({name, e, halfWidth, e - halfWidth, e + halfWidth});
        }
        return out;
    };
}

BiasValue metric_relative_bias(std::span<const double> est, double truth) {
    if (est.empty()) throw Error(ErrorCode::TooFewReps, "no estimates");
    double sum = 0.0;
    for (double e : est) sum += e - truth;
    const double bias = sum / static_cast<double>(est.size());
    if (std::abs(truth) < kZeroTruth) return {bias, true};
    return {bias / truth + 0.0, false};  // + 0.0 folds -0 into 0
}

double metric_empirical_se(std::span<const double> est) {
    if (est.size() < 2) throw Error(ErrorCode::TooFewReps, "empirical SE needs at least two estimates");
    // Shifted by the first value so constant input gives exactly zero.
    const double shift = est.front();
    double mean = 0.0;
    for (double e : est) mean += e - shift;
    mean /= static_cast<double>(est.size());
    double ss = 0.0;
    for (double e : est) ss += (e - shift - mean) * (e - shift - mean);
    return std::sqrt(ss / static_cast<double>(est.size() - 1));
}

BiasValue metric_relative_rmse(std::span<const double> est, double truth) {
    if (est.empty()) throw Error(ErrorCode::TooFewReps, "no estimates");
    double ss = 0.0;
    for (double e : est) ss += (e - truth) * (e - truth);
    const double rmse = std::sqrt(ss / static_cast<double>(est.size()));
    if (std::abs(truth) < kZeroTruth) return {rmse, true};
    return {rmse / truth + 0.0, false};
}

double metric_coverage(std::span<const std::pair<double, double>> cis, double truth) {
    if (cis.empty()) throw Error(ErrorCode::TooFewReps, "coverage needs at least one interval");
    std::size_t hit = 0;
    for (const auto& [lo, hi] : cis)
        if (lo <= truth && truth <= hi) ++hit;
    return static_cast<double>(hit) / static_cast<double>(cis.size());
}

double metric_mc_se(double variance, int S) {
    if (S < 1) throw Error(ErrorCode::TooFewReps, "MC SE needs at least one replication");
    return std::sqrt(variance / static_cast<double>(S));
}

MetricsReport compute_metrics(const SimCondition& cond, std::span<const RepOutcome> kept) {
    MetricsReport rep;
    rep.condition = cond;
    rep.converged = static_cast<int>(kept.size());
    for (const auto& o : kept) {
        if (o.usedReduced) ++rep.usedReduced;
        bool neg = false, cor = false;
        for (const auto& f : o.improper) (f.kind == ImproperKind::NegativeVariance ? neg : cor) = true;
        rep.improper.negativeVariance += neg;
        rep.improper.outOfRangeCorrelation += cor;
        rep.improper.any += neg || cor;
    }
    for (const auto& [name, truth] : truth_table(cond)) {
        std::vector<double> est;
        std::vector<std::pair<double, double>> cis;
        for (const auto& o : kept) {
            for (const auto& p : o.estimates) {
                if (p.name != name) continue;
                est.push_back(p.estimate);
                if (std::isfinite(p.ciLow) && std::isfinite(p.ciHigh)) cis.emplace_back(p.ciLow, p.ciHigh);
                break;
            }
        }
        if (est.empty()) continue;
        ParamMetrics m;
        m.name = name;
        m.truth = truth;
        m.count = static_cast<int>(est.size());
        m.intervalCount = static_cast<int>(cis.size());
        for (double e : est) m.mean += e;
        m.mean /= static_cast<double>(est.size());
        m.relativeBias = metric_relative_bias(est, truth);
        m.relativeRMSE = metric_relative_rmse(est, truth);
        m.empiricalSE = est.size() >= 2 ? metric_empirical_se(est) : std::numeric_limits<double>::quiet_NaN();
        m.coverage = cis.empty() ? std::numeric_limits<double>::quiet_NaN() : metric_coverage(cis, truth);
        m.mcSE = est.size() >= 2 ? metric_mc_se(m.empiricalSE * m.empiricalSE, m.count)
                                 : std::numeric_limits<double>::quiet_NaN();
        rep.params.push_back(std::move(m));
    }
    return rep;
}

MetricsReport run_condition(const SimCondition& cond, int S, const HarnessOptions& options) {
    if (S < 1) throw Error(ErrorCode::InvalidArgument, "S must be at least 1");
    cond.validate();
    options.fit.validate();
    const int workers = std::max(1, options.workers);
    const std::uint64_t maxDraws = options.maxDraws > 0 ? static_cast<std::uint64_t>(options.maxDraws)
                                                        : 20ULL * static_cast<std::uint64_t>(S);
    const Estimator estimator = options.estimator ? options.estimator : Estimator(run_replication);

    std::vector<RepOutcome> kept;
    std::vector<RepRecord> records;
    std::uint64_t next = 0;
    std::uint64_t attempted = 0;
    while (static_cast<int>(kept.size()) < S && next < maxDraws) {
        // Enough draws to finish if everything converges, at least one per worker.
        const std::uint64_t want = std::max<std::uint64_t>(static_cast<std::uint64_t>(S) - kept.size(),
                                                           static_cast<std::uint64_t>(workers));
        const std::uint64_t batch = std::min(want, maxDraws - next);
        std::vector<RepOutcome> results(batch);
        std::vector<std::exception_ptr> errors(batch);
        std::atomic<std::uint64_t> cursor{0};
        auto work = [&] {
            for (std::uint64_t k = cursor++; k < batch; k = cursor++) {
                const std::uint64_t index = next + k;
                try {
                    results[k] = estimator(cond, index, derive_seed(options.masterSeed, index), options.fit);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        };
        const int nThreads = static_cast<int>(std::min<std::uint64_t>(batch, static_cast<std::uint64_t>(workers)));
        if (nThreads <= 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < nThreads; ++w) pool.emplace_back(work);
            for (auto& th : pool) th.join();
        }
        for (std::uint64_t k = 0; k < batch; ++k) {
            if (errors[k]) std::rethrow_exception(errors[k]);
            if (static_cast<int>(kept.size()) == S) break;
            attempted = next + k + 1;
            const RepOutcome& o = results[k];
            records.push_back({o.index, o.seed, o.converged, o.usedReduced, o.attemptsToConverge, o.improper});
            if (o.converged) kept.push_back(std::move(results[k]));
        }
        next += batch;
    }

    MetricsReport rep = compute_metrics(cond, kept);
    rep.masterSeed = options.masterSeed;
    rep.requested = S;
    rep.attempted = static_cast<int>(attempted);
    rep.complete = static_cast<int>(kept.size()) == S;
    rep.replications = std::move(records);
    return rep;
}

Summary summarize(std::vector<double> values) {
    std::erase_if(values, [](double v) { return !std::isfinite(v); });
    Summary s;
    s.count = static_cast<int>(values.size());
    if (values.empty()) {
        s.median = s.min = s.max = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    s.median = values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
    s.min = values.front();
    s.max = values.back();
    return s;
}

std::vector<GridSummaryRow> summarize_grid(std::span<const MetricsReport> reports) {
    if (reports.empty()) throw Error(ErrorCode::InvalidArgument, "no reports to summarize");
    std::vector<std::string> order;
    std::map<std::string, std::vector<const ParamMetrics*>> byName;
    for (const auto& r : reports)
        for (const auto& p : r.params) {
            auto& list = byName[p.name];
            if (list.empty()) order.push_back(p.name);
            list.push_back(&p);
        }
    std::vector<GridSummaryRow> rows;
    for (const auto& name : order) {
        std::vector<double> bias, ese, rmse, cov, mcse;
        for (const ParamMetrics* p : byName[name]) {
            bias.push_back(p->relativeBias.value);
            ese.push_back(p->empiricalSE);
            rmse.push_back(p->relativeRMSE.value);
            cov.push_back(p->coverage);
            mcse.push_back(p->mcSE);
        }
        rows.push_back({name, summarize(bias), summarize(ese), summarize(rmse), summarize(cov), summarize(mcse)});
    }
    return rows;
}

}  // namespace pwlgm
