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

#include "pwlgm.h"

#include "pwlgm/estimation.hpp"
#include "pwlgm/harness.hpp"
#include "pwlgm/io.hpp"
#include "pwlgm/reparam.hpp"
#include "pwlgm/simgen.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <new>
#include <sstream>
#include <string>

struct pwlgm_dataset {
    pwlgm::LongitudinalDataset data;
};

struct pwlgm_fit {
    pwlgm::FitResult result;
    pwlgm::RunConfig config;
};

namespace {

thread_local std::string g_lastError;

pwlgm_status status_of(pwlgm::ErrorCode code) {
    using pwlgm::ErrorCode;
    switch (code) {
    case ErrorCode::NonPDCovariance:
    case ErrorCode::SingularInformation:
    case ErrorCode::NonPSDJoint: return PWLGM_ERR_NUMERIC;
    default: return PWLGM_ERR_INPUT;
    }
}

pwlgm_status fail(pwlgm_status s, const std::string& msg) {
    g_lastError = msg;
    return s;
}

// Runs body, translating exceptions into status codes.
template <class F>
pwlgm_status guarded(F&& body) {
    try {
        return body();
    } catch (const pwlgm::Error& e) {
        return fail(status_of(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(PWLGM_ERR_INPUT, std::string("invalid JSON: ") + e.what());
    } catch (const std::bad_alloc&) {
        return fail(PWLGM_ERR_NUMERIC, "out of memory");
    } catch (const std::exception& e) {
        return fail(PWLGM_ERR_NUMERIC, e.what());
    } catch (...) {
        return fail(PWLGM_ERR_NUMERIC, "unknown error");
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void put(char** out, const std::string& s) {
    if (out) *out = dup_string(s);
}

pwlgm::RunConfig parse_config(const char* text) {
    if (!text || !*text) return pwlgm::RunConfig{};
    return pwlgm::config_from_json(pwlgm::Json::parse(text));
}

}  // namespace

extern "C" {

const char* pwlgm_version(void) { return "1.0.0"; }

const char* pwlgm_last_error(void) { return g_lastError.c_str(); }

void pwlgm_string_free(char* s) { std::free(s); }

pwlgm_status pwlgm_dataset_read_csv(const char* path, int long_layout, pwlgm_dataset** out) {
    if (!path || !out) return fail(PWLGM_ERR_INPUT, "null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new pwlgm_dataset{pwlgm::read_csv_file(path, long_layout != 0)};
        return PWLGM_OK;
    });
}

pwlgm_status pwlgm_dataset_write_csv(const pwlgm_dataset* data, const char* path) {
    if (!data || !path) return fail(PWLGM_ERR_INPUT, "null argument");
    return guarded([&] {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw pwlgm::Error(pwlgm::ErrorCode::Io, std::string("cannot write '") + path + "'");
        pwlgm::write_wide_csv(f, data->data);
        if (!f) throw pwlgm::Error(pwlgm::ErrorCode::Io, std::string("write failed for '") + path + "'");
        return PWLGM_OK;
    });
}

pwlgm_status pwlgm_dataset_to_csv(const pwlgm_dataset* data, char** csv) {
    if (!data || !csv) return fail(PWLGM_ERR_INPUT, "null argument");
    return guarded([&] {
        std::ostringstream s;
        pwlgm::write_wide_csv(s, data->data);
        put(csv, s.str());
        return PWLGM_OK;
    });
}

pwlgm_status pwlgm_dataset_dims(const pwlgm_dataset* data, size_t* n, size_t* waves, size_t* covariates) {
    if (!data) return fail(PWLGM_ERR_INPUT, "null dataset");
    if (n) *n = data->data.n();
    if (waves) *waves = data->data.waves();
    if (covariates) *covariates = data->data.covariates();
    return PWLGM_OK;
}

void pwlgm_dataset_free(pwlgm_dataset* data) { delete data; }

pwlgm_status pwlgm_simulate(const char* config_json, uint64_t seed, pwlgm_dataset** out, char** truth_json) {
    if (!out) return fail(PWLGM_ERR_INPUT, "null argument");
    *out = nullptr;
    return guarded([&] {
        const pwlgm::RunConfig cfg = parse_config(config_json);
        pwlgm::GeneratedData gen = pwlgm::gen_dataset(cfg.condition, seed);
        if (truth_json) {
            pwlgm::Json t = pwlgm::params_to_json(gen.truth);
            pwlgm::Json doc{{"condition", pwlgm::condition_to_json(cfg.condition)},
                            {"seed", seed},
                            {"configHash", pwlgm::config_hash(cfg)},
                            {"truth", t}};
            put(truth_json, doc.dump(2) + "\n");
        }
        *out = new pwlgm_dataset{std::move(gen.data)};
        return PWLGM_OK;
    });
}

pwlgm_status pwlgm_fit_run(const pwlgm_dataset* data, const char* config_json, pwlgm_fit** out) {
    if (!data || !out) return fail(PWLGM_ERR_INPUT, "null argument");
    *out = nullptr;
    return guarded([&] {
        pwlgm::RunConfig cfg = parse_config(config_json);
        if (cfg.model == "compare")
            throw pwlgm::Error(pwlgm::ErrorCode::InvalidArgument, "use pwlgm_compare for model comparison");
        const auto kind = pwlgm::model_kind_from_string(cfg.model);
        pwlgm::FitResult r = pwlgm::fit_model(kind, data->data, cfg.fitOptions());
        const bool ok = r.converged;
        *out = new pwlgm_fit{std::move(r), std::move(cfg)};
        if (!ok) return fail(PWLGM_ERR_NOT_CONVERGED, "the fit did not converge");
        return PWLGM_OK;
    });
}

pwlgm_status pwlgm_fit_report(const pwlgm_fit* fit, char** report_json) {
    if (!fit || !report_json) return fail(PWLGM_ERR_INPUT, "null argument");
    return guarded([&] {
        put(report_json, pwlgm::fit_report_json(fit->result, fit->config).dump(2) + "\n");
        return PWLGM_OK;
    });
}

int pwlgm_fit_converged(const pwlgm_fit* fit) { return fit && fit->result.converged ? 1 : 0; }

double pwlgm_fit_loglik(const pwlgm_fit* fit) {
    return fit ? fit->result.loglik : std::numeric_limits<double>::quiet_NaN();
}

void pwlgm_fit_free(pwlgm_fit* fit) { delete fit; }

pwlgm_status pwlgm_compare(const pwlgm_dataset* data, const char* config_json, char** table_json) {
    if (!data || !table_json) return fail(PWLGM_ERR_INPUT, "null argument");
    return guarded([&] {
        const pwlgm::RunConfig cfg = parse_config(config_json);
        const auto rows = pwlgm::compare_models(data->data, cfg.fitOptions());
        put(table_json, pwlgm::comparison_json(rows, cfg).dump(2) + "\n");
        for (const auto& r : rows)
            if (!r.converged) return fail(PWLGM_ERR_NOT_CONVERGED, std::string("the ") + pwlgm::to_string(r.model) +
                                                                       " model did not converge");
        return PWLGM_OK;
    });
}

pwlgm_status pwlgm_transform(const char* params_json, const char* direction, int exact_inverse, char** out_json) {
    if (!params_json || !direction || !out_json) return fail(PWLGM_ERR_INPUT, "null argument");
    return guarded([&] {
        const pwlgm::Json in = pwlgm::Json::parse(params_json);
        const std::string dir = direction;
        pwlgm::Json result;
        if (dir == "toReparam") {
            result = pwlgm::params_to_json(pwlgm::to_reparam(pwlgm::original_from_json(in)));
        } else if (dir == "fromReparam") {
            const auto variant =
                exact_inverse ? pwlgm::InverseJacobian::ExactInverse : pwlgm::InverseJacobian::Displayed;
            result = pwlgm::params_to_json(pwlgm::from_reparam(pwlgm::reparam_from_json(in), variant));
        } else if (dir == "cellwise") {
            result = pwlgm::params_to_json(pwlgm::from_reparam_cellwise(pwlgm::reparam_from_json(in)));
        } else {
            throw pwlgm::Error(pwlgm::ErrorCode::InvalidArgument,
                               "direction must be toReparam, fromReparam or cellwise, got '" + dir + "'");
        }
        put(out_json, result.dump(2) + "\n");
        return PWLGM_OK;
    });
}

pwlgm_status pwlgm_mc_run(const char* config_json, int workers, char** metrics_json, char** metrics_csv,
                          char** replications_csv) {
    return guarded([&] {
        const pwlgm::RunConfig cfg = parse_config(config_json);
        pwlgm::HarnessOptions opts;
        opts.fit = cfg.fitOptions();
        opts.masterSeed = cfg.masterSeed;
        opts.workers = workers > 0 ? workers : cfg.workers;
        opts.maxDraws = cfg.maxDraws;
        if (cfg.estimator == "truth") opts.estimator = pwlgm::truth_stub();
        std::vector<pwlgm::SimCondition> cells = cfg.grid;
        if (cells.empty()) cells.push_back(cfg.condition);
        std::vector<pwlgm::MetricsReport> reports;
        for (const auto& cell : cells) reports.push_back(pwlgm::run_condition(cell, cfg.S, opts));
        if (metrics_json) put(metrics_json, pwlgm::mc_output_json(reports, cfg).dump(2) + "\n");
        if (metrics_csv) {
            std::ostringstream s;
            pwlgm::write_metrics_csv(s, reports);
            put(metrics_csv, s.str());
        }
        if (replications_csv) {
            std::ostringstream s;
            pwlgm::write_replications_csv(s, reports);
            put(replications_csv, s.str());
        }
        return PWLGM_OK;
    });
}

}  // extern "C"
