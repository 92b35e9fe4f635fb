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

#include "pwlgm/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace pwlgm {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    std::string out(s.substr(b, e - b + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                            : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void csv_error(const std::string& source, std::size_t line, const std::string& column,
                            const std::string& msg) {
    std::string where = source + " row " + std::to_string(line);
    if (!column.empty()) where += ", column '" + column + "'";
    throw Error(ErrorCode::InvalidData, where + ": " + msg);
}

double parse_cell(const std::string& text, const std::string& source, std::size_t line, const std::string& column) {
    if (text.empty()) csv_error(source, line, column, "missing value");
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) csv_error(source, line, column, "not a number: '" + text + "'");
    if (!std::isfinite(v)) csv_error(source, line, column, "non-finite value");
    return v;
}

// Column names of the form <prefix><1-based index>.
bool indexed(const std::string& name, char prefix, std::size_t index) {
    return name == std::string(1, prefix) + std::to_string(index);
}

bool next_line(std::istream& in, std::string& line, std::size_t& lineNo) {
    while (std::getline(in, line)) {
        ++lineNo;
        if (!trim(line).empty()) return true;
    }
    return false;
}

}  // namespace

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

LongitudinalDataset read_wide_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineNo = 0;
    if (!next_line(in, line, lineNo)) throw Error(ErrorCode::InvalidData, source + ": empty file");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_fields(line);
    if (header.empty() || header[0] != "id") csv_error(source, lineNo, header.empty() ? "" : header[0], "first column must be 'id'");
    std::size_t J = 0;
    while (1 + J < header.size() && indexed(header[1 + J], 'y', J + 1)) ++J;
    if (J == 0) csv_error(source, lineNo, "", "expected outcome columns y1..yJ after 'id'");
    for (std::size_t j = 0; j < J; ++j)
        if (1 + J + j >= header.size() || !indexed(header[1 + J + j], 't', j + 1))
            csv_error(source, lineNo, 1 + J + j < header.size() ? header[1 + J + j] : "",
                      "expected time column t" + std::to_string(j + 1));
    const std::size_t c = header.size() - 1 - 2 * J;
    for (std::size_t k = 0; k < c; ++k)
        if (!indexed(header[1 + 2 * J + k], 'x', k + 1))
            csv_error(source, lineNo, header[1 + 2 * J + k], "expected covariate column x" + std::to_string(k + 1));

    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    while (next_line(in, line, lineNo)) {
        const auto f = split_fields(line);
        if (f.size() != header.size())
            csv_error(source, lineNo, "",
                      "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
        if (f[0].empty()) csv_error(source, lineNo, "id", "missing id");
        ids.push_back(f[0]);
        std::vector<double> r(f.size() - 1);
        for (std::size_t k = 1; k < f.size(); ++k) r[k - 1] = parse_cell(f[k], source, lineNo, header[k]);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw Error(ErrorCode::InvalidData, source + ": no data rows");

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto JJ = static_cast<Eigen::Index>(J);
    const auto cc = static_cast<Eigen::Index>(c);
    Matrix Y(n, JJ), T(n, JJ), X(n, cc);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < JJ; ++j) {
            Y(i, j) = r[static_cast<std::size_t>(j)];
            T(i, j) = r[static_cast<std::size_t>(JJ + j)];
        }
        for (Eigen::Index k = 0; k < cc; ++k) X(i, k) = r[static_cast<std::size_t>(2 * JJ + k)];
    }
    return LongitudinalDataset(std::move(Y), std::move(T), std::move(X), std::move(ids));
}

LongitudinalDataset read_long_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineNo = 0;
    if (!next_line(in, line, lineNo)) throw Error(ErrorCode::InvalidData, source + ": empty file");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_fields(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "t" || header[2] != "y")
        csv_error(source, lineNo, "", "long layout needs header 'id,t,y[,x1..xc]'");
    const std::size_t c = header.size() - 3;
    for (std::size_t k = 0; k < c; ++k)
        if (!indexed(header[3 + k], 'x', k + 1))
            csv_error(source, lineNo, header[3 + k], "expected covariate column x" + std::to_string(k + 1));

    struct Person {
        std::string id;
        std::vector<double> t, y;
        std::vector<double> x;
    };
    std::vector<Person> people;
    std::set<std::string> seen;
    while (next_line(in, line, lineNo)) {
        const auto f = split_fields(line);
        if (f.size() != header.size())
            csv_error(source, lineNo, "",
                      "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
        if (f[0].empty()) csv_error(source, lineNo, "id", "missing id");
        if (people.empty() || people.back().id != f[0]) {
            if (!seen.insert(f[0]).second) csv_error(source, lineNo, "id", "rows of id '" + f[0] + "' are not contiguous");
            people.push_back({f[0], {}, {}, {}});
            for (std::size_t k = 0; k < c; ++k) people.back().x.push_back(parse_cell(f[3 + k], source, lineNo, header[3 + k]));
        } else {
            for (std::size_t k = 0; k < c; ++k)
                if (parse_cell(f[3 + k], source, lineNo, header[3 + k]) != people.back().x[k])
                    csv_error(source, lineNo, header[3 + k], "covariate varies within id '" + f[0] + "'");
        }
        people.back().t.push_back(parse_cell(f[1], source, lineNo, "t"));
        people.back().y.push_back(parse_cell(f[2], source, lineNo, "y"));
    }
    if (people.empty()) throw Error(ErrorCode::InvalidData, source + ": no data rows");
    const std::size_t J = people.front().t.size();
    for (const auto& p : people)
        if (p.t.size() != J)
            throw Error(ErrorCode::InvalidData, source + ": id '" + p.id + "' has " + std::to_string(p.t.size()) +
                                                    " measurements, expected " + std::to_string(J));
    const auto n = static_cast<Eigen::Index>(people.size());
    Matrix Y(n, static_cast<Eigen::Index>(J)), T(n, static_cast<Eigen::Index>(J)), X(n, static_cast<Eigen::Index>(c));
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = people[static_cast<std::size_t>(i)];
        ids.push_back(p.id);
        for (std::size_t j = 0; j < J; ++j) {
            Y(i, static_cast<Eigen::Index>(j)) = p.y[j];
            T(i, static_cast<Eigen::Index>(j)) = p.t[j];
        }
        for (std::size_t k = 0; k < c; ++k) X(i, static_cast<Eigen::Index>(k)) = p.x[k];
    }
    return LongitudinalDataset(std::move(Y), std::move(T), std::move(X), std::move(ids));
}

LongitudinalDataset read_csv_file(const std::string& path, bool longLayout) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
    return longLayout ? read_long_csv(in, path) : read_wide_csv(in, path);
}

void write_wide_csv(std::ostream& out, const LongitudinalDataset& data) {
    const std::size_t J = data.waves();
    const std::size_t c = data.covariates();
    out << "id";
    for (std::size_t j = 1; j <= J; ++j) out << ",y" << j;
    for (std::size_t j = 1; j <= J; ++j) out << ",t" << j;
    for (std::size_t k = 1; k <= c; ++k) out << ",x" << k;
    out << '\n';
    for (std::size_t i = 0; i < data.n(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out << data.ids()[i];
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(J); ++j) out << ',' << format_number(data.Y()(r, j));
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(J); ++j) out << ',' << format_number(data.T()(r, j));
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(c); ++k) out << ',' << format_number(data.X()(r, k));
        out << '\n';
    }
}

// ---- JSON ----------------------------------------------------------------

namespace {

[[noreturn]] void json_error(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); }

Json vector_to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
    return a;
}

Vector vector_from_json(const Json& j, const std::string& what) {
    if (!j.is_array()) json_error(what + " must be an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!j[k].is_number()) json_error(what + " must be an array of numbers");
        v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
    }
    return v;
}

const Json& require(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) json_error(where + ": missing key '" + key + "'");
    return j.at(key);
}

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) json_error(where + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!allowed.contains(key)) json_error(where + ": unknown key '" + key + "'");
}

void check_symmetric(const Matrix& m, const std::string& what) {
    if (m.rows() != m.cols()) json_error(what + " must be square");
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = r + 1; c < m.cols(); ++c)
            if (std::abs(m(r, c) - m(c, r)) > 1e-8)
                json_error(what + " is not symmetric at (" + std::to_string(r) + ", " + std::to_string(c) + ")");
}

double number(const Json& j, const std::string& what) {
    if (!j.is_number()) json_error(what + " must be a number");
    return j.get<double>();
}

int integer(const Json& j, const std::string& what) {
    if (!j.is_number_integer()) json_error(what + " must be an integer");
    return j.get<int>();
}

struct Common {
    Matrix B;
    Vector muX;
    Matrix Phi;
    double thetaEps;
};

Common common_from_json(const Json& j, const char* bKey, const std::string& where) {
    Common c;
    c.muX = j.contains("muX") ? vector_from_json(j.at("muX"), "muX") : Vector();
    const auto nc = c.muX.size();
    c.B = j.contains(bKey) ? matrix_from_json(j.at(bKey), bKey) : Matrix::Zero(4, nc);
    c.Phi = j.contains("Phi") ? matrix_from_json(j.at("Phi"), "Phi") : Matrix::Identity(nc, nc);
    if (c.B.rows() != 4 || c.B.cols() != nc)
        json_error(where + ": " + bKey + " must be 4 x " + std::to_string(nc) + " (one column per entry of muX)");
    if (c.Phi.rows() != nc) json_error(where + ": Phi must match muX in size");
    check_symmetric(c.Phi, "Phi");
    c.thetaEps = number(require(j, "thetaEps", where), "thetaEps");
    return c;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
    Json data = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        json_error(what + " must be an object {rows, cols, data}");
    const int rows = integer(j.at("rows"), what + ".rows");
    const int cols = integer(j.at("cols"), what + ".cols");
    if (rows < 0 || cols < 0) json_error(what + " has negative dimensions");
    const Vector d = vector_from_json(j.at("data"), what + ".data");
    if (d.size() != static_cast<Eigen::Index>(rows) * cols)
        json_error(what + ".data has " + std::to_string(d.size()) + " entries, expected " +
                   std::to_string(rows * cols));
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = d(r * cols + c);
    return m;
}

Json params_to_json(const OriginalParams& p) {
    return Json{{"space", "original"},
                {"alpha", vector_to_json(p.alpha)},
                {"Psi", matrix_to_json(p.Psi)},
                {"B", matrix_to_json(p.B.size() == 0 ? Matrix::Zero(4, p.muX.size()) : p.B)},
                {"muX", vector_to_json(p.muX)},
                {"Phi", matrix_to_json(p.Phi)},
                {"thetaEps", p.thetaEps}};
}

Json params_to_json(const ReparamParams& p) {
    return Json{{"space", "reparam"},
                {"alphaPrime", vector_to_json(p.alphaPrime)},
                {"PsiPrime", matrix_to_json(p.PsiPrime)},
                {"BPrime", matrix_to_json(p.BPrime.size() == 0 ? Matrix::Zero(4, p.muX.size()) : p.BPrime)},
                {"muX", vector_to_json(p.muX)},
                {"Phi", matrix_to_json(p.Phi)},
                {"thetaEps", p.thetaEps}};
}

OriginalParams original_from_json(const Json& j) {
    const std::string where = "original-space parameters";
    reject_unknown(j, {"space", "alpha", "Psi", "B", "muX", "Phi", "thetaEps"}, where);
    if (j.contains("space") && j.at("space") != "original") json_error(where + ": space must be 'original'");
    OriginalParams p;
    const Vector a = vector_from_json(require(j, "alpha", where), "alpha");
    if (a.size() != 4) json_error("alpha must have 4 entries");
    p.alpha = a;
    const Matrix Psi = matrix_from_json(require(j, "Psi", where), "Psi");
    if (Psi.rows() != 4 || Psi.cols() != 4) json_error("Psi must be 4 x 4");
    check_symmetric(Psi, "Psi");
    p.Psi = 0.5 * (Psi + Psi.transpose());
    Common c = common_from_json(j, "B", where);
    p.B = std::move(c.B);
    p.muX = std::move(c.muX);
    p.Phi = std::move(c.Phi);
    p.thetaEps = c.thetaEps;
    return p;
}

ReparamParams reparam_from_json(const Json& j) {
    const std::string where = "reparameterized parameters";
    reject_unknown(j, {"space", "alphaPrime", "PsiPrime", "BPrime", "muX", "Phi", "thetaEps"}, where);
    if (j.contains("space") && j.at("space") != "reparam") json_error(where + ": space must be 'reparam'");
    ReparamParams p;
    const Vector a = vector_from_json(require(j, "alphaPrime", where), "alphaPrime");
    if (a.size() != 4) json_error("alphaPrime must have 4 entries (the last is the knot mean)");
    p.alphaPrime = a;
    const Matrix Psi = matrix_from_json(require(j, "PsiPrime", where), "PsiPrime");
    if (Psi.rows() != 4 || Psi.cols() != 4) json_error("PsiPrime must be 4 x 4");
    check_symmetric(Psi, "PsiPrime");
    p.PsiPrime = 0.5 * (Psi + Psi.transpose());
    Common c = common_from_json(j, "BPrime", where);
    p.BPrime = std::move(c.B);
    p.muX = std::move(c.muX);
    p.Phi = std::move(c.Phi);
    p.thetaEps = c.thetaEps;
    return p;
}

FitOptions RunConfig::fitOptions() const {
    FitOptions o;
    o.mode = mode;
    o.ciLevel = ciLevel;
    o.maxAttempts = maxAttempts;
    o.seed = masterSeed;
    return o;
}

Json condition_to_json(const SimCondition& c) {
    return Json{{"n", c.n},
                {"J", c.J},
                {"knotMean", c.knotMean},
                {"knotSD", c.knotSD},
                {"slopeDiff", c.slopeDiff},
                {"explainedShare", c.explainedShare},
                {"thetaEps", c.thetaEps},
                {"delta", c.delta}};
}

SimCondition condition_from_json(const Json& j) {
    reject_unknown(j, {"n", "J", "knotMean", "knotSD", "slopeDiff", "explainedShare", "thetaEps", "delta"},
                   "condition");
    SimCondition c;
    if (j.contains("n")) c.n = integer(j.at("n"), "condition.n");
    if (j.contains("J")) c.J = integer(j.at("J"), "condition.J");
    if (j.contains("knotMean")) c.knotMean = number(j.at("knotMean"), "condition.knotMean");
    if (j.contains("knotSD")) c.knotSD = number(j.at("knotSD"), "condition.knotSD");
    if (j.contains("slopeDiff")) c.slopeDiff = number(j.at("slopeDiff"), "condition.slopeDiff");
    if (j.contains("explainedShare")) c.explainedShare = number(j.at("explainedShare"), "condition.explainedShare");
    if (j.contains("thetaEps")) c.thetaEps = number(j.at("thetaEps"), "condition.thetaEps");
    if (j.contains("delta")) c.delta = number(j.at("delta"), "condition.delta");
    try {
        c.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("condition: ") + e.what());
    }
    return c;
}

RunConfig config_from_json(const Json& j) {
    reject_unknown(j,
                   {"model", "mode", "ciLevel", "maxAttempts", "masterSeed", "condition", "grid", "workers", "S",
                    "maxDraws", "estimator"},
                   "config");
    RunConfig c;
    if (j.contains("model")) {
        if (!j.at("model").is_string()) json_error("config.model must be a string");
        c.model = j.at("model").get<std::string>();
        if (c.model != "compare") (void)model_kind_from_string(c.model);
    }
    if (j.contains("mode")) {
        if (!j.at("mode").is_string()) json_error("config.mode must be a string");
        c.mode = likelihood_mode_from_string(j.at("mode").get<std::string>());
    }
    if (j.contains("ciLevel")) c.ciLevel = number(j.at("ciLevel"), "config.ciLevel");
    if (j.contains("maxAttempts")) c.maxAttempts = integer(j.at("maxAttempts"), "config.maxAttempts");
    if (j.contains("masterSeed")) {
        if (!j.at("masterSeed").is_number_unsigned()) json_error("config.masterSeed must be a non-negative integer");
        c.masterSeed = j.at("masterSeed").get<std::uint64_t>();
    }
    if (j.contains("condition")) c.condition = condition_from_json(j.at("condition"));
    if (j.contains("grid")) {
        const Json& g = j.at("grid");
        if (g.is_string() && g.get<std::string>() == "design") {
            c.grid = design_grid();
        } else if (g.is_array()) {
            for (const auto& cell : g) c.grid.push_back(condition_from_json(cell));
        } else {
            json_error("config.grid must be \"design\" or an array of conditions");
        }
    }
    if (j.contains("workers")) c.workers = integer(j.at("workers"), "config.workers");
    if (j.contains("S")) c.S = integer(j.at("S"), "config.S");
    if (j.contains("maxDraws")) c.maxDraws = integer(j.at("maxDraws"), "config.maxDraws");
    if (j.contains("estimator")) {
        if (!j.at("estimator").is_string()) json_error("config.estimator must be a string");
        c.estimator = j.at("estimator").get<std::string>();
        if (c.estimator != "fit" && c.estimator != "truth")
            json_error("config.estimator must be \"fit\" or \"truth\"");
    }
    if (c.workers < 1) json_error("config.workers must be at least 1");
    if (c.S < 1) json_error("config.S must be at least 1");
    if (c.maxDraws < 0) json_error("config.maxDraws must be non-negative");
    try {
        c.fitOptions().validate();
    } catch (const Error& e) {
        json_error(std::string("config: ") + e.what());
    }
    return c;
}

RunConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, path + ": " + e.what());
    }
    return config_from_json(j);
}

Json config_to_json(const RunConfig& c) {
    Json j{{"model", c.model},
           {"mode", to_string(c.mode)},
           {"ciLevel", c.ciLevel},
           {"maxAttempts", c.maxAttempts},
           {"masterSeed", c.masterSeed},
           {"condition", condition_to_json(c.condition)},
           {"S", c.S},
           {"maxDraws", c.maxDraws},
           {"estimator", c.estimator}};
    if (!c.grid.empty()) {
        Json g = Json::array();
        for (const auto& cell : c.grid) g.push_back(condition_to_json(cell));
        j["grid"] = g;
    }
    return j;
}

std::string config_hash(const RunConfig& c) {
    // FNV-1a, 64 bit.
    const std::string text = config_to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

Json interpretable_json(const FitResult& fit) {
    return std::visit(
        [&](const auto& p) -> Json {
            using T = std::decay_t<decltype(p)>;
            Json j;
            if constexpr (std::is_same_v<T, OriginalParams>) {
                j["alpha"] = vector_to_json(p.alpha);
            } else if constexpr (std::is_same_v<T, ReducedOriginalParams>) {
                j["alpha"] = vector_to_json(p.alpha);
                j["gamma"] = p.gamma;
            } else {
                j["alpha"] = vector_to_json(p.alpha);
            }
            j["Psi"] = matrix_to_json(p.Psi);
            j["B"] = matrix_to_json(p.B);
            j["muX"] = vector_to_json(fit.covariateMeans);
            j["Phi"] = matrix_to_json(p.Phi);
            j["thetaEps"] = p.thetaEps;
            return j;
        },
        fit.theta);
}

Json estimable_json(const FitResult& fit) {
    return std::visit(
        [&](const auto& p) -> Json {
            using T = std::decay_t<decltype(p)>;
            Json j;
            if constexpr (std::is_same_v<T, ReparamParams>) {
                j["alphaPrime"] = vector_to_json(p.alphaPrime);
                j["PsiPrime"] = matrix_to_json(p.PsiPrime);
                j["BPrime"] = matrix_to_json(p.BPrime);
            } else if constexpr (std::is_same_v<T, ReducedParams>) {
                j["alphaPrime"] = vector_to_json(p.alphaPrime);
                j["gamma"] = p.gamma;
                j["PsiPrime"] = matrix_to_json(p.PsiPrime);
                j["BPrime"] = matrix_to_json(p.BPrime);
            } else {
                j["alpha"] = vector_to_json(p.alpha);
                j["Psi"] = matrix_to_json(p.Psi);
                j["B"] = matrix_to_json(p.B);
            }
            j["muX"] = vector_to_json(fit.covariateMeans);
            j["Phi"] = matrix_to_json(p.Phi);
            j["thetaEps"] = p.thetaEps;
            return j;
        },
        fit.thetaPrime);
}

Json table_json(const std::vector<ParamEstimate>& table, bool se) {
    Json j = Json::object();
    for (const auto& p : table) {
        if (se)
            j[p.name] = p.se;  // NaN serializes as null
        else
            j[p.name] = Json::array({p.ciLow, p.ciHigh});
    }
    return j;
}

Json estimates_json(const std::vector<ParamEstimate>& table) {
    Json j = Json::object();
    for (const auto& p : table) j[p.name] = p.estimate;
    return j;
}

Json bias_json(const BiasValue& b) { return Json{{"value", b.value}, {"absolute", b.absolute}}; }

Json summary_json(const Summary& s) {
    return Json{{"median", s.median}, {"min", s.min}, {"max", s.max}, {"count", s.count}};
}

}  // namespace

Json fit_report_json(const FitResult& fit, const RunConfig& config) {
    Json flags = Json::array();
    for (const auto& f : fit.improperFlags) flags.push_back(f.label());
    return Json{{"model", to_string(fit.model)},
                {"mode", to_string(fit.mode)},
                {"configHash", config_hash(config)},
                {"seed", config.masterSeed},
                {"originalParams", interpretable_json(fit)},
                {"reparamParams", estimable_json(fit)},
                {"estimates", {{"original", estimates_json(fit.original)}, {"reparam", estimates_json(fit.reparam)}}},
                {"se", {{"original", table_json(fit.original, true)}, {"reparam", table_json(fit.reparam, true)}}},
                {"ci",
                 {{"level", config.ciLevel},
                  {"original", table_json(fit.original, false)},
                  {"reparam", table_json(fit.reparam, false)}}},
                {"fit",
                 {{"loglik", fit.loglik},
                  {"minus2LogLik", -2.0 * fit.loglik},
                  {"aic", fit.aic},
                  {"bic", fit.bic},
                  {"residualVar", fit.residualVar},
                  {"nParams", fit.nParams},
                  {"n", fit.n}}},
                {"status",
                 {{"converged", fit.converged},
                  {"attempts", fit.attempts},
                  {"iterations", fit.iterations},
                  {"stopReason", fit.stopReason},
                  {"seAvailable", fit.seAvailable},
                  {"singularInformation", fit.singularInformation},
                  {"improperFlags", flags}}}};
}

Json comparison_json(const std::vector<ComparisonRow>& rows, const RunConfig& config) {
    Json table = Json::array();
    for (const auto& r : rows)
        table.push_back(Json{{"model", to_string(r.model)},
                             {"minus2LogLik", r.minus2LogLik},
                             {"aic", r.aic},
                             {"bic", r.bic},
                             {"nParams", r.nParams},
                             {"residualVar", r.residualVar},
                             {"converged", r.converged}});
    return Json{{"configHash", config_hash(config)}, {"seed", config.masterSeed}, {"comparison", table}};
}

Json metrics_report_json(const MetricsReport& r) {
    Json params = Json::array();
    for (const auto& p : r.params)
        params.push_back(Json{{"name", p.name},
                              {"truth", p.truth},
                              {"count", p.count},
                              {"intervalCount", p.intervalCount},
                              {"mean", p.mean},
                              {"relativeBias", bias_json(p.relativeBias)},
                              {"empiricalSE", p.empiricalSE},
                              {"relativeRMSE", bias_json(p.relativeRMSE)},
                              {"coverage", p.coverage},
                              {"mcSE", p.mcSE}});
    Json reps = Json::array();
    for (const auto& o : r.replications) {
        Json flags = Json::array();
        for (const auto& f : o.improper) flags.push_back(f.label());
        reps.push_back(Json{{"index", o.index},
                            {"seed", o.seed},
                            {"converged", o.converged},
                            {"usedReduced", o.usedReduced},
                            {"attempts", o.attempts},
                            {"improperFlags", flags}});
    }
    return Json{{"condition", condition_to_json(r.condition)},
                {"masterSeed", r.masterSeed},
                {"requested", r.requested},
                {"attempted", r.attempted},
                {"converged", r.converged},
                {"usedReduced", r.usedReduced},
                {"complete", r.complete},
                {"improper",
                 {{"negativeVariance", r.improper.negativeVariance},
                  {"outOfRangeCorrelation", r.improper.outOfRangeCorrelation},
                  {"any", r.improper.any}}},
                {"params", params},
                {"replications", reps}};
}

Json mc_output_json(const std::vector<MetricsReport>& reports, const RunConfig& config) {
    Json blocks = Json::array();
    for (const auto& r : reports) blocks.push_back(metrics_report_json(r));
    Json out{{"configHash", config_hash(config)}, {"masterSeed", config.masterSeed}, {"reports", blocks}};
    if (!reports.empty()) {
        Json summary = Json::array();
        for (const auto& row : summarize_grid(reports))
            summary.push_back(Json{{"name", row.name},
                                   {"relativeBias", summary_json(row.relativeBias)},
                                   {"empiricalSE", summary_json(row.empiricalSE)},
                                   {"relativeRMSE", summary_json(row.relativeRMSE)},
                                   {"coverage", summary_json(row.coverage)},
                                   {"mcSE", summary_json(row.mcSE)}});
        out["summary"] = summary;
    }
    return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsReport>& reports) {
    out << "condition,n,J,knotMean,knotSD,slopeDiff,explainedShare,thetaEps,delta,parameter,truth,count,"
           "relativeBias,biasIsAbsolute,empiricalSE,relativeRMSE,coverage,mcSE\n";
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& r = reports[k];
        const auto& c = r.condition;
        for (const auto& p : r.params) {
            out << k << ',' << c.n << ',' << c.J << ',' << format_number(c.knotMean) << ','
                << format_number(c.knotSD) << ',' << format_number(c.slopeDiff) << ','
                << format_number(c.explainedShare) << ',' << format_number(c.thetaEps) << ','
                << format_number(c.delta) << ',' << p.name << ',' << format_number(p.truth) << ',' << p.count << ','
                << format_number(p.relativeBias.value) << ',' << (p.relativeBias.absolute ? 1 : 0) << ','
                << format_number(p.empiricalSE) << ',' << format_number(p.relativeRMSE.value) << ','
                << format_number(p.coverage) << ',' << format_number(p.mcSE) << '\n';
        }
    }
}

void write_replications_csv(std::ostream& out, const std::vector<MetricsReport>& reports) {
    out << "condition,index,seed,converged,usedReduced,attempts,improperFlags\n";
    for (std::size_t k = 0; k < reports.size(); ++k)
        for (const auto& o : reports[k].replications) {
            std::string flags;
            for (const auto& f : o.improper) flags += (flags.empty() ? "" : ";") + f.label();
            out << k << ',' << o.index << ',' << o.seed << ',' << (o.converged ? 1 : 0) << ','
                << (o.usedReduced ? 1 : 0) << ',' << o.attempts << ",\"" << flags << "\"\n";
        }
}

}  // namespace pwlgm
