/*
 * Copyright 2026 The lce-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file io.hpp
 * @brief CSV ingestion and versioned JSON documents.
 *
 * CSV data files have the header `v1,...,v{dH},u1,...,u{dG}[,w]`; the
 * optional `w` column holds unnormalised non-negative weights. Query files
 * use the same header with the u (and w) columns omitted.
 *
 * JSON documents carry `"schema": "lce-lab/1"` and a `"kind"` tag. Matrices
 * are arrays of rows. Numbers are written as the shortest decimal string
 * that reads back to the same double.
 */

#pragma once

#include <lcelab/cme.hpp>
#include <lcelab/gaussian.hpp>
#include <lcelab/lce.hpp>
#include <lcelab/verification.hpp>

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace lcelab::io {

using json = nlohmann::json;

inline constexpr const char* kSchema = "lce-lab/1";

// ---------------------------------------------------------------------------
// Numbers

/// Shortest decimal representation that round-trips.
inline std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view text, const std::string& where) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw Error(ErrorCode::InvalidInput, where + ": cannot parse number '" +
                                                 std::string(text) + "'");
    if (!std::isfinite(value))
        throw Error(ErrorCode::InvalidInput, where + ": non-finite number");
    return value;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvData {
    Matrix v;
    Matrix u; ///< zero columns for query files
    std::optional<Vector> w;
};

namespace detail {

using lcelab::detail::require;

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace detail

/// Reads a data or query CSV. Errors name the offending line.
inline CsvData read_csv(std::istream& in, const std::string& source = "<input>") {
    std::string line;
    std::size_t line_no = 0;
    auto where = [&](std::size_t n) { return source + ":" + std::to_string(n); };

    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) {
            header = detail::split(line);
            break;
        }
    }
    if (header.empty()) throw Error(ErrorCode::InvalidInput, source + ": missing CSV header");

    Eigen::Index dv = 0, du = 0;
    bool has_w = false;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = detail::trim(header[i]);
        const std::string expect_v = "v" + std::to_string(dv + 1);
        const std::string expect_u = "u" + std::to_string(du + 1);
        if (name == expect_v && du == 0 && !has_w) {
            ++dv;
        } else if (name == expect_u && dv > 0 && !has_w) {
            ++du;
        } else if (name == "w" && dv > 0 && i + 1 == header.size()) {
            has_w = true;
        } else {
            throw Error(ErrorCode::InvalidInput,
                        where(line_no) + ": unexpected header column '" + name +
                            "' (expected v1..vN, u1..uM, optional w)");
        }
    }

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split(line);
        if (fields.size() != header.size())
            throw Error(ErrorCode::DimensionMismatch,
                        where(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_number(f, where(line_no)));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::InvalidInput, source + ": no data rows");

    const auto n = static_cast<Eigen::Index>(rows.size());
    CsvData out;
    out.v.resize(n, dv);
    out.u.resize(n, du);
    if (has_w) out.w = Vector(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < dv; ++c) out.v(r, c) = row[static_cast<std::size_t>(c)];
        for (Eigen::Index c = 0; c < du; ++c) out.u(r, c) = row[static_cast<std::size_t>(dv + c)];
        if (has_w) (*out.w)(r) = row.back();
    }
    return out;
}

inline CsvData read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidInput, "cannot open '" + path + "'");
    return read_csv(in, path);
}

/// Law of a data CSV (u columns required).
inline FiniteJointDistribution distribution(const CsvData& data) {
    detail::require(data.u.cols() >= 1, ErrorCode::InvalidInput,
                    "data CSV needs at least one u column");
    return moments_from_samples(data.v, data.u, data.w);
}

inline std::vector<std::string> column_names(const std::string& prefix, Eigen::Index count) {
    std::vector<std::string> out;
    for (Eigen::Index i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& header,
                      const Matrix& rows) {
    detail::require(static_cast<Eigen::Index>(header.size()) == rows.cols(),
                    ErrorCode::DimensionMismatch, "write_csv: header/column count differ");
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < rows.cols(); ++c)
            out << (c ? "," : "") << format_number(rows(r, c));
        out << '\n';
    }
}

inline void write_data_csv(std::ostream& out, const FiniteJointDistribution& dist) {
    auto header = column_names("v", dist.dim_v());
    for (auto& h : column_names("u", dist.dim_u())) header.push_back(h);
    header.emplace_back("w");
    Matrix rows(dist.size(), dist.dim_v() + dist.dim_u() + 1);
    rows << dist.v(), dist.u(), dist.weights();
    write_csv(out, header, rows);
}

// ---------------------------------------------------------------------------
// JSON building blocks

inline json to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline json matrix_to_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

inline const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key))
        throw Error(ErrorCode::InvalidInput, std::string("JSON: missing field '") + key + "'");
    return j.at(key);
}

inline double number_from_json(const json& j, const std::string& what) {
    if (!j.is_number()) throw Error(ErrorCode::InvalidInput, "JSON: " + what + " must be a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidInput, "JSON: " + what + " non-finite");
    return x;
}

inline Vector vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw Error(ErrorCode::InvalidInput, "JSON: " + what + " must be an array");
    Vector out(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = number_from_json(j[i], what);
    return out;
}

/// Rectangular array of rows. An empty array needs `cols_if_empty`.
inline Matrix matrix_from_json(const json& j, const std::string& what,
                               Eigen::Index cols_if_empty = 0) {
    if (!j.is_array()) throw Error(ErrorCode::InvalidInput, "JSON: " + what + " must be an array");
    if (j.empty()) return Matrix(0, cols_if_empty);
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j[0].is_array())
        throw Error(ErrorCode::InvalidInput, "JSON: " + what + " must be an array of rows");
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw Error(ErrorCode::DimensionMismatch, "JSON: " + what + " is not rectangular");
        for (Eigen::Index c = 0; c < cols; ++c)
            out(r, c) = number_from_json(row[static_cast<std::size_t>(c)], what);
    }
    return out;
}

inline json header(const char* kind) { return json{{"schema", kSchema}, {"kind", kind}}; }

inline void check_schema(const json& j, const char* kind) {
    if (!j.is_object() || !j.contains("schema") || j.at("schema") != kSchema)
        throw Error(ErrorCode::InvalidInput, std::string("JSON: expected schema ") + kSchema);
    if (kind && j.contains("kind") && j.at("kind") != kind)
        throw Error(ErrorCode::InvalidInput, std::string("JSON: expected kind '") + kind + "'");
}

inline json parse_json(std::istream& in, const std::string& source = "<input>") {
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidInput, source + ": " + e.what());
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidInput, "cannot open '" + path + "'");
    return parse_json(in, path);
}

/// Canonical text form of a document (two-space indent, trailing newline).
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Documents

inline json to_json(const Regime& r) {
    json out{{"name", r.name()}};
    if (r.kind == Regime::Kind::Truncated) out["rank"] = r.rank;
    if (r.kind == Regime::Kind::Regularized) out["eps"] = r.eps;
    return out;
}

inline Regime regime_from_json(const json& j) {
    const std::string name = field(j, "name").get<std::string>();
    if (name == "compatible") return Regime::compatible();
    if (name == "truncated") return Regime::truncated(field(j, "rank").get<Eigen::Index>());
    if (name == "regularized")
        return Regime::regularized(number_from_json(field(j, "eps"), "eps"));
    throw Error(ErrorCode::InvalidInput, "JSON: unknown regime '" + name + "'");
}

inline json operator_fields(const AffineOperator& g) {
    return json{{"A", matrix_to_json(g.a)}, {"b", to_json(g.b)}};
}

/// LCE fit document: A (rows), b, regime, compatibility residual, rank used
/// and, when given, the functional value E||U - gamma(V)||^2.
inline json to_json(const LceResult& r, std::optional<double> functional = std::nullopt) {
    json out = header("lce");
    out.update(operator_fields(r.gamma));
    out["regime"] = to_json(r.regime);
    out["compat_residual"] = r.compat_residual;
    out["rank_used"] = r.rank_used;
    if (functional) out["functional_value"] = *functional;
    return out;
}

inline LceResult lce_result_from_json(const json& j) {
    check_schema(j, "lce");
    LceResult r;
    r.gamma.b = vector_from_json(field(j, "b"), "b");
    r.gamma.a = matrix_from_json(field(j, "A"), "A");
    r.regime = regime_from_json(field(j, "regime"));
    r.compat_residual = number_from_json(field(j, "compat_residual"), "compat_residual");
    r.rank_used = field(j, "rank_used").get<Eigen::Index>();
    return r;
}

/// Any document with "A" and "b" fields (an LCE fit, an operator or a
/// conditional Gaussian) read as an affine operator.
inline AffineOperator operator_from_json(const json& j) {
    check_schema(j, nullptr);
    AffineOperator g;
    g.b = vector_from_json(field(j, "b"), "b");
    g.a = matrix_from_json(field(j, "A"), "A");
    detail::require(g.a.rows() == g.b.size() || (g.a.rows() == 0 && g.b.size() == 0),
                    ErrorCode::DimensionMismatch, "JSON: A and b shapes differ");
    return g;
}

inline json to_json(const AffineOperator& g) {
    json out = header("operator");
    out.update(operator_fields(g));
    return out;
}

/// LCC document: the field (base = ALCC, center = mu_V, flattened slope)
/// and its value at every distinct atom v of the law.
inline json to_json(const AffineOperatorField& f, const FiniteJointDistribution& dist) {
    json out = header("lcc");
    out["base"] = matrix_to_json(f.base);
    out["center"] = to_json(f.center);
    out["slope"] = matrix_to_json(f.slope_flat);
    json table = json::array();
    const auto [group, representative] = lcelab::detail::group_rows_exactly(dist.v());
    std::vector<double> prob(representative.size(), 0.0);
    for (Eigen::Index j = 0; j < dist.size(); ++j)
        prob[group[static_cast<std::size_t>(j)]] += dist.weights()(j);
    for (std::size_t g = 0; g < representative.size(); ++g) {
        const Vector v = dist.v_atom(representative[g]);
        table.push_back({{"v", to_json(v)}, {"value", matrix_to_json(f(v))}, {"prob", prob[g]}});
    }
    out["table"] = std::move(table);
    return out;
}

inline AffineOperatorField field_from_json(const json& j) {
    check_schema(j, "lcc");
    AffineOperatorField f;
    f.base = matrix_from_json(field(j, "base"), "base");
    f.center = vector_from_json(field(j, "center"), "center");
    f.slope_flat = matrix_from_json(field(j, "slope"), "slope", f.center.size());
    return f;
}

inline json to_json(const KernelSpec& k) {
    return json{{"family", k.family_name()},
                {"lengthscale", k.lengthscale},
                {"offset", k.offset},
                {"degree", k.degree}};
}

inline KernelSpec kernel_from_json(const json& j) {
    KernelSpec k;
    k.family = KernelSpec::parse_family(field(j, "family").get<std::string>());
    k.lengthscale = number_from_json(field(j, "lengthscale"), "lengthscale");
    k.offset = number_from_json(field(j, "offset"), "offset");
    k.degree = field(j, "degree").get<int>();
    k.validate();
    return k;
}

inline json to_json(const CmeModel& m) {
    json out = header("cme");
    out["x_points"] = matrix_to_json(m.x_points);
    out["y_points"] = matrix_to_json(m.y_points);
    out["weights"] = to_json(m.weights);
    out["k"] = to_json(m.k_spec);
    out["l"] = to_json(m.l_spec);
    out["eps"] = m.eps;
    out["factor_x"] = matrix_to_json(m.factor_x.root);
    out["factor_x_pinv"] = matrix_to_json(m.factor_x.root_pinv);
    out["factor_y"] = matrix_to_json(m.factor_y.root);
    out["factor_y_pinv"] = matrix_to_json(m.factor_y.root_pinv);
    json lce = to_json(m.lce);
    lce.erase("schema");
    out["lce"] = std::move(lce);
    return out;
}

inline CmeModel cme_model_from_json(const json& j) {
    check_schema(j, "cme");
    CmeModel m;
    m.x_points = matrix_from_json(field(j, "x_points"), "x_points");
    m.y_points = matrix_from_json(field(j, "y_points"), "y_points");
    m.weights = vector_from_json(field(j, "weights"), "weights");
    m.k_spec = kernel_from_json(field(j, "k"));
    m.l_spec = kernel_from_json(field(j, "l"));
    m.eps = number_from_json(field(j, "eps"), "eps");
    m.factor_x = {matrix_from_json(field(j, "factor_x"), "factor_x"),
                  matrix_from_json(field(j, "factor_x_pinv"), "factor_x_pinv")};
    m.factor_y = {matrix_from_json(field(j, "factor_y"), "factor_y"),
                  matrix_from_json(field(j, "factor_y_pinv"), "factor_y_pinv")};
    json lce = field(j, "lce");
    lce["schema"] = kSchema;
    m.lce = lce_result_from_json(lce);
    const auto n = m.x_points.rows();
    detail::require(m.y_points.rows() == n && m.weights.size() == n &&
                        m.factor_x.root.rows() == n && m.factor_x.root_pinv.cols() == n &&
                        m.factor_y.root.rows() == n && m.factor_y.root_pinv.cols() == n &&
                        m.lce.gamma.dim_in() == m.factor_x.root.cols() &&
                        m.lce.gamma.dim_out() == m.factor_y.root.cols(),
                    ErrorCode::DimensionMismatch, "JSON: inconsistent CME model shapes");
    return m;
}

inline json to_json(const GaussianMeasure& g, std::optional<Eigen::Index> dim_u = std::nullopt) {
    json out = header("gaussian");
    out["mean"] = to_json(g.mean);
    out["cov"] = matrix_to_json(g.cov);
    if (dim_u) out["dim_u"] = *dim_u;
    return out;
}

inline GaussianMeasure gaussian_from_json(const json& j) {
    check_schema(j, "gaussian");
    GaussianMeasure g;
    g.mean = vector_from_json(field(j, "mean"), "mean");
    g.cov = matrix_from_json(field(j, "cov"), "cov");
    g.validate();
    return g;
}

inline json to_json(const ConditionalGaussian& c) {
    json out = header("conditional-gaussian");
    out["regime"] = to_string(c.regime);
    out.update(operator_fields(c.mean_map));
    out["cond_cov"] = matrix_to_json(c.cond_cov);
    return out;
}

} // namespace lcelab::io
