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

// Command-line front end. Talks to the library only through pwlgm.h.

#include "pwlgm.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

namespace {

using Json = nlohmann::ordered_json;

struct CStr {
    char* p = nullptr;
    ~CStr() { pwlgm_string_free(p); }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

struct DatasetPtr {
    pwlgm_dataset* p = nullptr;
    ~DatasetPtr() { pwlgm_dataset_free(p); }
};

struct FitPtr {
    pwlgm_fit* p = nullptr;
    ~FitPtr() { pwlgm_fit_free(p); }
};

int report_error(pwlgm_status s) {
    std::cerr << "pwlgm: " << pwlgm_last_error() << "\n";
    return static_cast<int>(s);
}

int input_error(const std::string& msg) {
    std::cerr << "pwlgm: " << msg << "\n";
    return PWLGM_ERR_INPUT;
}

bool read_file(const std::string& path, std::string& text) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream s;
    s << in.rdbuf();
    text = s.str();
    return true;
}

bool write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return static_cast<bool>(std::cout);
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    return static_cast<bool>(out);
}

// Config file contents with command-line overrides applied.
struct ConfigSource {
    std::string path;
    std::optional<std::string> model;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> seed;
    std::optional<int> S;

    // Returns false and prints a diagnostic if the file cannot be read/parsed.
    bool build(std::string& out) const {
        Json j = Json::object();
        if (!path.empty()) {
            std::string text;
            if (!read_file(path, text)) {
                input_error("cannot open config '" + path + "'");
                return false;
            }
            try {
                j = Json::parse(text);
            } catch (const Json::exception& e) {
                input_error(path + ": " + e.what());
                return false;
            }
            if (!j.is_object()) {
                input_error(path + ": config must be a JSON object");
                return false;
            }
        }
        if (model) j["model"] = *model;
        if (mode) j["mode"] = *mode;
        if (seed) j["masterSeed"] = *seed;
        if (S) j["S"] = *S;
        out = j.dump();
        return true;
    }
};

void add_config_options(CLI::App* cmd, ConfigSource& cfg) {
    cmd->add_option("-c,--config", cfg.path, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", cfg.seed, "master seed (overrides config.masterSeed)");
}

void print_comparison(const std::string& json) {
    const Json doc = Json::parse(json);
    std::printf("%-10s %14s %14s %14s %4s %12s %s\n", "model", "-2loglik", "AIC", "BIC", "p", "residual", "converged");
    for (const auto& r : doc.at("comparison"))
        std::printf("%-10s %14.3f %14.3f %14.3f %4d %12.5f %s\n", r.at("model").get<std::string>().c_str(),
                    r.at("minus2LogLik").get<double>(), r.at("aic").get<double>(), r.at("bic").get<double>(),
                    r.at("nParams").get<int>(), r.at("residualVar").get<double>(),
                    r.at("converged").get<bool>() ? "yes" : "no");
}

int run_fit(const std::string& dataPath, bool longLayout, const ConfigSource& src, const std::string& outPath) {
    std::string config;
    if (!src.build(config)) return PWLGM_ERR_INPUT;
    DatasetPtr data;
    if (auto s = pwlgm_dataset_read_csv(dataPath.c_str(), longLayout ? 1 : 0, &data.p); s != PWLGM_OK)
        return report_error(s);

    const Json cfg = Json::parse(config);
    if (cfg.value("model", std::string("full")) == "compare") {
        CStr table;
        const pwlgm_status s = pwlgm_compare(data.p, config.c_str(), &table.p);
        if (s != PWLGM_OK && s != PWLGM_ERR_NOT_CONVERGED) return report_error(s);
        if (!outPath.empty() && outPath != "-") {
            if (!write_output(outPath, table.str())) return input_error("cannot write '" + outPath + "'");
            print_comparison(table.str());
        } else {
            write_output("-", table.str());
        }
        if (s != PWLGM_OK) report_error(s);
        return s;
    }

    FitPtr fit;
    const pwlgm_status s = pwlgm_fit_run(data.p, config.c_str(), &fit.p);
    if (!fit.p) return report_error(s);
    CStr report;
    if (auto r = pwlgm_fit_report(fit.p, &report.p); r != PWLGM_OK) return report_error(r);
    if (!write_output(outPath, report.str())) return input_error("cannot write '" + outPath + "'");
    if (s != PWLGM_OK) report_error(s);
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bilinear-spline latent growth models with a random knot"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(pwlgm_version()));

    // fit
    auto* fit = app.add_subcommand("fit", "fit a model to a CSV dataset and write a JSON report");
    std::string fitData, fitOut;
    bool fitLong = false;
    ConfigSource fitCfg;
    fit->add_option("data", fitData, "wide CSV: id,y1..yJ,t1..tJ,x1..xc")->required();
    add_config_options(fit, fitCfg);
    fit->add_option("-m,--model", fitCfg.model, "full, reduced, linear, quadratic or compare");
    fit->add_option("--mode", fitCfg.mode, "marginal or conditional");
    fit->add_flag("--long", fitLong, "read the long layout id,t,y,x1..xc");
    fit->add_option("-o,--out", fitOut, "report path (default stdout)");

    // compare
    auto* cmp = app.add_subcommand("compare", "fit all models and rank them by AIC");
    std::string cmpData, cmpOut;
    bool cmpLong = false;
    ConfigSource cmpCfg;
    cmp->add_option("data", cmpData, "wide CSV")->required();
    add_config_options(cmp, cmpCfg);
    cmp->add_option("--mode", cmpCfg.mode, "marginal or conditional");
    cmp->add_flag("--long", cmpLong, "read the long layout id,t,y,x1..xc");
    cmp->add_option("-o,--out", cmpOut, "JSON table path (default stdout)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "draw a dataset from the configured condition");
    std::string simOut, simTruth;
    ConfigSource simCfg;
    add_config_options(sim, simCfg);
    sim->add_option("-o,--out", simOut, "CSV path (default stdout)");
    sim->add_option("--truth", simTruth, "write the generating parameters as JSON");

    // mc
    auto* mc = app.add_subcommand("mc", "Monte Carlo study over a condition or a grid");
    std::string mcOut, mcCsv, mcReps;
    int mcWorkers = 0;
    ConfigSource mcCfg;
    add_config_options(mc, mcCfg);
    mc->add_option("-S,--replications", mcCfg.S, "convergent replications per condition");
    mc->add_option("-w,--workers", mcWorkers, "worker threads (overrides config.workers)")->check(CLI::PositiveNumber);
    mc->add_option("-o,--out", mcOut, "metrics JSON path (default stdout)");
    mc->add_option("--csv", mcCsv, "metrics CSV path");
    mc->add_option("--reps-csv", mcReps, "per-replication CSV path");

    // transform
    auto* tr = app.add_subcommand("transform", "map parameters between the two spaces");
    std::string trIn, trOut, trDir;
    bool trExact = false;
    tr->add_option("params", trIn, "parameter JSON")->required()->check(CLI::ExistingFile);
    tr->add_option("-d,--direction", trDir, "toReparam, fromReparam or cellwise")
        ->required()
        ->check(CLI::IsMember({"toReparam", "fromReparam", "cellwise"}));
    tr->add_flag("--exact-inverse", trExact, "use the exact inverse Jacobian for fromReparam");
    tr->add_option("-o,--out", trOut, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return PWLGM_ERR_INPUT;
    }

    if (*fit) return run_fit(fitData, fitLong, fitCfg, fitOut);

    if (*cmp) {
        cmpCfg.model = "compare";
        return run_fit(cmpData, cmpLong, cmpCfg, cmpOut);
    }

    if (*sim) {
        std::string config;
        if (!simCfg.build(config)) return PWLGM_ERR_INPUT;
        const Json cfg = Json::parse(config);
        const std::uint64_t seed = cfg.value("masterSeed", std::uint64_t{20260101});
        DatasetPtr data;
        CStr truth;
        if (auto s = pwlgm_simulate(config.c_str(), seed, &data.p, simTruth.empty() ? nullptr : &truth.p);
            s != PWLGM_OK)
            return report_error(s);
        CStr csv;
        if (auto s = pwlgm_dataset_to_csv(data.p, &csv.p); s != PWLGM_OK) return report_error(s);
        if (!write_output(simOut, csv.str())) return input_error("cannot write '" + simOut + "'");
        if (!simTruth.empty() && !write_output(simTruth, truth.str()))
            return input_error("cannot write '" + simTruth + "'");
        return 0;
    }

    if (*mc) {
        std::string config;
        if (!mcCfg.build(config)) return PWLGM_ERR_INPUT;
        CStr json, csv, reps;
        if (auto s = pwlgm_mc_run(config.c_str(), mcWorkers, &json.p, &csv.p, &reps.p); s != PWLGM_OK)
            return report_error(s);
        if (!write_output(mcOut, json.str())) return input_error("cannot write '" + mcOut + "'");
        if (!mcCsv.empty() && !write_output(mcCsv, csv.str())) return input_error("cannot write '" + mcCsv + "'");
        if (!mcReps.empty() && !write_output(mcReps, reps.str())) return input_error("cannot write '" + mcReps + "'");
        return 0;
    }

    if (*tr) {
        std::string text;
        if (!read_file(trIn, text)) return input_error("cannot open '" + trIn + "'");
        CStr out;
        if (auto s = pwlgm_transform(text.c_str(), trDir.c_str(), trExact ? 1 : 0, &out.p); s != PWLGM_OK)
            return report_error(s);
        if (!write_output(trOut, out.str())) return input_error("cannot write '" + trOut + "'");
        return 0;
    }
    return PWLGM_ERR_INPUT;
}
