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

// lcelab: command-line front end of the lce-lab library.
//
// Exit codes: 0 success, 1 a paper-examples check failed or an unexpected
// error, 2 bad arguments / unparsable or inconsistent input, 3 incompatible
// moments under --regime=compatible.

#include <lcelab/lcelab.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace lcelab;
using io::json;

constexpr int kExitFailedCheck = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitIncompatible = 3;

struct RunConfig {
    std::string regime;
    std::optional<double> eps;
    std::optional<Eigen::Index> rank;
    double tol_rank = Tolerance::kDefaultRankRel;
    double tol_res = Tolerance::kDefaultResidualAbs;
    std::optional<std::uint64_t> seed;
    std::string input;
    std::string output;
    std::string format; ///< empty selects the subcommand default

    // subcommand specific
    std::string operator_path;
    std::string model_path;
    std::optional<Eigen::Index> dim_u;
    Eigen::Index count = 1000;
    std::string only;
    std::vector<std::string> params;
    std::string series;
    KernelSpec k_spec;
    KernelSpec l_spec;
    std::string k_family = "gaussian-rbf";
    std::string l_family = "gaussian-rbf";
    std::vector<double> p_values{1.0, 1.5, 3.0, 4.0};
    double eps_max = 1.0;
    Eigen::Index points = 101;
    int k_max = 100;
    Eigen::Index grid = 100'000;
};

void with_format(RunConfig& c, const char* fallback) {
    if (c.format.empty()) c.format = fallback;
}

Tolerance tolerance(const RunConfig& c) { return {c.tol_rank, c.tol_res}; }

std::uint64_t resolve_seed(const RunConfig& c) {
    if (c.seed) return *c.seed;
    if (const char* env = std::getenv("LCE_LAB_SEED")) {
        try {
            std::size_t used = 0;
            const auto value = std::stoull(env, &used, 0);
            if (used == std::string(env).size()) return value;
        } catch (const std::exception&) {
        }
        throw Error(ErrorCode::InvalidInput, "LCE_LAB_SEED is not an unsigned integer");
    }
    return kDefaultSeed;
}

/// Regime selection: explicit --regime, else --eps (regularised), else
/// --rank (truncated), else compatible.
Regime resolve_regime(const RunConfig& c) {
    std::string name = c.regime;
    if (name.empty()) name = c.eps ? "regularized" : c.rank ? "truncated" : "compatible";
    if (name == "compatible") return Regime::compatible();
    if (name == "truncated") {
        if (!c.rank) throw Error(ErrorCode::InvalidInput, "--regime=truncated needs --rank");
        return Regime::truncated(*c.rank);
    }
    if (name == "regularized") {
        if (!c.eps) throw Error(ErrorCode::InvalidInput, "--regime=regularized needs --eps");
        return Regime::regularized(*c.eps);
    }
    throw Error(ErrorCode::InvalidInput, "unknown regime '" + name + "'");
}

void emit(const RunConfig& c, const std::string& text) {
    if (c.output.empty() || c.output == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(c.output, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidInput, "cannot write '" + c.output + "'");
    out << text;
}

void require_format(const RunConfig& c, std::initializer_list<const char*> allowed) {
    for (const char* f : allowed)
        if (c.format == f) return;
    throw Error(ErrorCode::InvalidInput, "--format=" + c.format + " is not supported here");
}

/// A table as CSV or as a {"columns", "rows"} JSON document.
std::string table_text(const RunConfig& c, const char* kind,
                       const std::vector<std::string>& columns, const Matrix& rows) {
    if (c.format == "csv") {
        std::ostringstream os;
        io::write_csv(os, columns, rows);
        return os.str();
    }
    json doc = io::header(kind);
    doc["columns"] = columns;
    doc["rows"] = io::matrix_to_json(rows);
    return io::dump(doc);
}

const std::string& require_input(const RunConfig& c) {
    if (c.input.empty()) throw Error(ErrorCode::InvalidInput, "--input is required");
    return c.input;
}

// ---------------------------------------------------------------------------

void cmd_lce_fit(const RunConfig& c) {
    require_format(c, {"json", "csv"});
    const auto dist = io::distribution(io::read_csv_file(require_input(c)));
    const auto result = fit_lce(empirical_moments(dist), resolve_regime(c), tolerance(c));
    if (c.format == "csv") {
        Matrix rows(result.gamma.dim_out(), result.gamma.dim_in() + 1);
        rows << result.gamma.b, result.gamma.a;
        auto columns = io::column_names("a", result.gamma.dim_in());
        columns.insert(columns.begin(), "b");
        emit(c, table_text(c, "lce", columns, rows));
        return;
    }
    emit(c, io::dump(io::to_json(result, functional_value(dist, result.gamma))));
}

void cmd_lce_eval(const RunConfig& c) {
    require_format(c, {"csv", "json"});
    if (c.operator_path.empty()) throw Error(ErrorCode::InvalidInput, "--operator is required");
    const auto gamma = io::operator_from_json(io::read_json_file(c.operator_path));
    const auto query = io::read_csv_file(require_input(c));
    emit(c, table_text(c, "lce-eval", io::column_names("g", gamma.dim_out()),
                       gamma.apply_rows(query.v)));
}

void cmd_lcc(const RunConfig& c) {
    require_format(c, {"json", "csv"});
    const auto dist = io::distribution(io::read_csv_file(require_input(c)));
    const auto field = lcc(dist, std::nullopt, resolve_regime(c), tolerance(c));
    const json doc = io::to_json(field, dist);
    if (c.format == "json") {
        emit(c, io::dump(doc));
        return;
    }
    // CSV: one row per distinct v with the flattened field value.
    const auto& table = doc.at("table");
    const Eigen::Index dv = field.dim_v();
    const Eigen::Index dz = field.dim_u() * field.dim_w();
    Matrix rows(static_cast<Eigen::Index>(table.size()), dv + dz);
    for (std::size_t r = 0; r < table.size(); ++r) {
        const Vector v = io::vector_from_json(table[r].at("v"), "v");
        const Matrix value = field(v);
        rows.row(static_cast<Eigen::Index>(r)).head(dv) = v.transpose();
        for (Eigen::Index i = 0; i < field.dim_u(); ++i)
            for (Eigen::Index j = 0; j < field.dim_w(); ++j)
                rows(static_cast<Eigen::Index>(r), dv + i * field.dim_w() + j) = value(i, j);
    }
    auto columns = io::column_names("v", dv);
    for (Eigen::Index i = 1; i <= field.dim_u(); ++i)
        for (Eigen::Index j = 1; j <= field.dim_w(); ++j)
            columns.push_back("c" + std::to_string(i) + "_" + std::to_string(j));
    emit(c, table_text(c, "lcc", columns, rows));
}

/// Canonical spec: parameters a family ignores take their fixed values.
KernelSpec kernel_spec(const std::string& family, const KernelSpec& given) {
    switch (KernelSpec::parse_family(family)) {
    case KernelSpec::Family::GaussianRbf: return KernelSpec::gaussian_rbf(given.lengthscale);
    case KernelSpec::Family::Linear: return KernelSpec::linear();
    case KernelSpec::Family::Polynomial: return KernelSpec::polynomial(given.degree, given.offset);
    }
    return given;
}

void cmd_cme_fit(const RunConfig& c) {
    require_format(c, {"json"});
    const auto dist = io::distribution(io::read_csv_file(require_input(c)));
    const KernelSpec k = kernel_spec(c.k_family, c.k_spec);
    const KernelSpec l = kernel_spec(c.l_family, c.l_spec);
    const Regime regime = resolve_regime(c);
    const CmeModel model = regime.kind == Regime::Kind::Regularized
                               ? cme_fit(dist, k, l, regime.eps, tolerance(c))
                               : cme_fit(dist, k, l, regime, tolerance(c));
    emit(c, io::dump(io::to_json(model)));
}

void cmd_cme_predict(const RunConfig& c) {
    require_format(c, {"csv", "json"});
    if (c.model_path.empty()) throw Error(ErrorCode::InvalidInput, "--model is required");
    const auto model = io::cme_model_from_json(io::read_json_file(c.model_path));
    const auto query = io::read_csv_file(require_input(c));
    const bool with_g = query.u.cols() > 0;
    const Eigen::Index m = model.lce.gamma.dim_out();
    Matrix rows(query.v.rows(), m + 1 + (with_g ? 1 : 0));
    for (Eigen::Index r = 0; r < query.v.rows(); ++r) {
        const Vector x = query.v.row(r).transpose();
        const auto pred = cme_predict(model, x);
        rows.row(r).head(m) = pred.coords.transpose();
        rows(r, m) = pred.out_of_span;
        if (with_g) rows(r, m + 1) = cme_expectation(model, query.u.row(r).transpose(), x);
    }
    auto columns = io::column_names("c", m);
    columns.emplace_back("out_of_span");
    if (with_g) columns.emplace_back("expectation");
    emit(c, table_text(c, "cme-prediction", columns, rows));
}

void cmd_gaussian_condition(const RunConfig& c) {
    require_format(c, {"json"});
    const json doc = io::read_json_file(require_input(c));
    const auto joint = io::gaussian_from_json(doc);
    Eigen::Index dim_u = 0;
    if (c.dim_u)
        dim_u = *c.dim_u;
    else if (doc.contains("dim_u"))
        dim_u = doc.at("dim_u").get<Eigen::Index>();
    else
        throw Error(ErrorCode::InvalidInput, "dim_u missing (JSON field or --dim-u)");
    const auto regime = parse_gaussian_regime(c.regime.empty() ? "compatible" : c.regime);
    emit(c, io::dump(io::to_json(gaussian_condition(joint, dim_u, regime, tolerance(c)))));
}

void cmd_gaussian_sample(const RunConfig& c) {
    require_format(c, {"csv", "json"});
    const auto g = io::gaussian_from_json(io::read_json_file(require_input(c)));
    const Matrix draws = sample(g, c.count, resolve_seed(c), tolerance(c));
    emit(c, table_text(c, "samples", io::column_names("x", g.dim()), draws));
}

FixtureParams fixture_params(const std::vector<std::string>& assignments) {
    FixtureParams p;
    for (const auto& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidInput, "--param expects KEY=VALUE, got '" + a + "'");
        const std::string key = a.substr(0, eq);
        const std::string value = a.substr(eq + 1);
        auto num = [&] { return io::parse_number(value, "--param " + key); };
        if (key == "N") p.lcc_n = num();
        else if (key == "eps" || key == "contractivity_eps") p.contractivity_eps = num();
        else if (key == "sign_eps") p.contractivity_sign_eps = num();
        else if (key == "p_below") p.p_below = num();
        else if (key == "p_above") p.p_above = num();
        else if (key == "dct_eps") p.dct_eps = num();
        else if (key == "dct_grid") p.dct_grid = static_cast<Eigen::Index>(num());
        else if (key == "dct_grading") p.dct_grading = num();
        else if (key == "dct_ks") {
            p.dct_ks.clear();
            std::istringstream is(value);
            std::string item;
            while (std::getline(is, item, ':'))
                p.dct_ks.push_back(static_cast<int>(io::parse_number(item, "--param dct_ks")));
        } else {
            throw Error(ErrorCode::InvalidInput, "unknown --param key '" + key + "'");
        }
    }
    return p;
}

int cmd_paper_examples(const RunConfig& c) {
    if (c.format != "json" && c.format != "text") require_format(c, {"text", "json"});
    const FixtureParams params = fixture_params(c.params);
    std::vector<Fixture> selected;
    if (c.only.empty())
        selected = fixtures(params);
    else
        selected.push_back(fixture(c.only, params));

    bool all_pass = true;
    std::ostringstream text;
    json report = io::header("fixture-report");
    report["fixtures"] = json::array();
    std::size_t passed_fixtures = 0;
    for (const auto& f : selected) {
        const auto checks = f.evaluate();
        bool ok = true;
        double max_dev = 0.0;
        json jchecks = json::array();
        text << "fixture " << f.name << " (" << f.source << ")\n";
        for (const auto& chk : checks) {
            ok = ok && chk.passed();
            if (chk.relation == Relation::Equal) max_dev = std::max(max_dev, chk.deviation());
            text << "  " << (chk.passed() ? "PASS" : "FAIL") << "  " << chk.label
                 << ": computed " << io::format_number(chk.computed) << ", expected "
                 << io::format_number(chk.expected) << " [" << chk.exact << "]";
            if (chk.relation == Relation::Equal)
                text << ", |dev| " << io::format_number(chk.deviation()) << " <= "
                     << io::format_number(chk.tolerance);
            text << "\n";
            jchecks.push_back({{"label", chk.label},
                               {"exact", chk.exact},
                               {"computed", chk.computed},
                               {"expected", chk.expected},
                               {"tolerance", chk.tolerance},
                               {"passed", chk.passed()}});
        }
        text << "  max |deviation| " << io::format_number(max_dev) << " -> "
             << (ok ? "PASS" : "FAIL") << "\n";
        report["fixtures"].push_back({{"name", f.name},
                                      {"source", f.source},
                                      {"checks", std::move(jchecks)},
                                      {"max_deviation", max_dev},
                                      {"passed", ok}});
        passed_fixtures += ok ? 1 : 0;
        all_pass = all_pass && ok;
    }
    text << "summary: " << passed_fixtures << "/" << selected.size() << " fixtures pass\n";
    report["passed"] = all_pass;
    emit(c, c.format == "json" ? io::dump(report) : text.str());
    return all_pass ? 0 : kExitFailedCheck;
}

void cmd_plotdata(const RunConfig& c) {
    require_format(c, {"csv", "json"});
    if (c.series == "contractivity") {
        if (c.points < 2) throw Error(ErrorCode::InvalidInput, "--points must be >= 2");
        Matrix rows(static_cast<Eigen::Index>(c.p_values.size()) * c.points, 4);
        Eigen::Index r = 0;
        for (double p : c.p_values)
            for (Eigen::Index i = 0; i < c.points; ++i, ++r) {
                const double e = c.eps_max * static_cast<double>(i) / static_cast<double>(c.points - 1);
                rows.row(r) << p, e, contractivity_f1(e, p), contractivity_f2(e, p);
            }
        emit(c, table_text(c, "plotdata", {"p", "eps", "f1", "f2"}, rows));
    } else if (c.series == "dct") {
        const double e = c.eps.value_or(0.25);
        if (c.k_max < 1) throw Error(ErrorCode::InvalidInput, "--k-max must be >= 1");
        const DctGrid grid = make_dct_grid(e, c.grid);
        Matrix rows(c.k_max, 3);
        for (int k = 1; k <= c.k_max; ++k)
            rows.row(k - 1) << k, dct_slope_closed_form(e, k), dct_slope_discrete(grid, k);
        emit(c, table_text(c, "plotdata", {"k", "a_k_closed_form", "a_k_discrete"}, rows));
    } else if (c.series == "scatter") {
        const auto dist = io::distribution(io::read_csv_file(require_input(c)));
        const auto gamma = fit_lce(empirical_moments(dist), resolve_regime(c), tolerance(c)).gamma;
        Matrix rows(dist.size(), dist.dim_v() + 2 * dist.dim_u());
        rows << dist.v(), dist.u(), gamma.apply_rows(dist.v());
        auto columns = io::column_names("v", dist.dim_v());
        for (auto& s : io::column_names("u", dist.dim_u())) columns.push_back(s);
        for (auto& s : io::column_names("g", dist.dim_u())) columns.push_back(s);
        emit(c, table_text(c, "plotdata", columns, rows));
    } else {
        throw Error(ErrorCode::InvalidInput, "--series must be contractivity, dct or scatter");
    }
}

// ---------------------------------------------------------------------------

void add_common(CLI::App* app, RunConfig& c) {
    app->add_option("--regime", c.regime, "compatible | truncated | regularized (gaussian: "
                                          "invertible | compatible | incompatible)");
    app->add_option("--eps", c.eps, "Tikhonov parameter (regularized regime)");
    app->add_option("--rank", c.rank, "truncation level n (truncated regime)");
    app->add_option("--tol-rank", c.tol_rank, "relative eigenvalue cutoff")
        ->capture_default_str();
    app->add_option("--tol-res", c.tol_res, "absolute residual tolerance")->capture_default_str();
    app->add_option("--seed", c.seed, "RNG seed (falls back to LCE_LAB_SEED, then " +
                                          std::to_string(kDefaultSeed) + ")");
    app->add_option("--input", c.input, "input file");
    app->add_option("--output", c.output, "output file (default stdout)");
    app->add_option("--format", c.format, "json | csv (default depends on the subcommand)");
}

void add_kernel_options(CLI::App* app, RunConfig& c) {
    app->add_option("--k-family", c.k_family, "x kernel: gaussian-rbf | linear | polynomial")
        ->capture_default_str();
    app->add_option("--k-lengthscale", c.k_spec.lengthscale)->capture_default_str();
    app->add_option("--k-offset", c.k_spec.offset)->capture_default_str();
    app->add_option("--k-degree", c.k_spec.degree)->capture_default_str();
    app->add_option("--l-family", c.l_family, "y kernel: gaussian-rbf | linear | polynomial")
        ->capture_default_str();
    app->add_option("--l-lengthscale", c.l_spec.lengthscale)->capture_default_str();
    app->add_option("--l-offset", c.l_spec.offset)->capture_default_str();
    app->add_option("--l-degree", c.l_spec.degree)->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lcelab: linear conditional expectations, covariances, kernel conditional "
                 "mean embeddings and Gaussian conditioning"};
    app.require_subcommand(1);
    RunConfig c;
    std::function<int()> action;
    auto run = [&action](std::function<void()> f) {
        action = [f = std::move(f)] {
            f();
            return 0;
        };
    };

    auto* lce = app.add_subcommand("lce", "fit or evaluate an LCE");
    lce->require_subcommand(1);
    auto* lce_fit = lce->add_subcommand("fit", "fit an LCE to a data CSV");
    add_common(lce_fit, c);
    lce_fit->callback([&] { run([&] { with_format(c, "json"); cmd_lce_fit(c); }); });
    auto* lce_eval = lce->add_subcommand("eval", "apply an operator JSON to a query CSV");
    add_common(lce_eval, c);
    lce_eval->add_option("--operator", c.operator_path, "operator or LCE fit JSON");
    lce_eval->callback([&] { run([&] { with_format(c, "csv"); cmd_lce_eval(c); }); });

    auto* lcc_cmd = app.add_subcommand("lcc", "linear conditional covariance field and table");
    add_common(lcc_cmd, c);
    lcc_cmd->callback([&] { run([&] { with_format(c, "json"); cmd_lcc(c); }); });

    auto* cme = app.add_subcommand("cme", "conditional mean embeddings");
    cme->require_subcommand(1);
    auto* cme_fit_cmd = cme->add_subcommand("fit", "fit a CME model to an (x, y) CSV");
    add_common(cme_fit_cmd, c);
    add_kernel_options(cme_fit_cmd, c);
    cme_fit_cmd->callback([&] { run([&] { with_format(c, "json"); cmd_cme_fit(c); }); });
    auto* cme_predict_cmd = cme->add_subcommand("predict", "predict embeddings at query points");
    add_common(cme_predict_cmd, c);
    cme_predict_cmd->add_option("--model", c.model_path, "CME model JSON");
    cme_predict_cmd->callback([&] { run([&] { with_format(c, "csv"); cmd_cme_predict(c); }); });

    auto* gauss = app.add_subcommand("gaussian", "Gaussian conditioning and sampling");
    gauss->require_subcommand(1);
    auto* cond = gauss->add_subcommand("condition", "condition a joint Gaussian JSON on V");
    add_common(cond, c);
    cond->add_option("--dim-u", c.dim_u, "size of the leading U block");
    cond->callback([&] { run([&] { with_format(c, "json"); cmd_gaussian_condition(c); }); });
    auto* samp = gauss->add_subcommand("sample", "draw samples from a Gaussian JSON");
    add_common(samp, c);
    samp->add_option("--count", c.count, "number of draws")->capture_default_str();
    samp->callback([&] { run([&] { with_format(c, "csv"); cmd_gaussian_sample(c); }); });

    auto* ex = app.add_subcommand("paper-examples", "run the reference fixtures");
    add_common(ex, c);
    ex->add_option("--only", c.only, "run a single fixture");
    ex->add_option("--param", c.params, "fixture parameter KEY=VALUE (repeatable)");
    ex->callback([&] {
        action = [&] {
            with_format(c, "text");
            return cmd_paper_examples(c);
        };
    });

    auto* plot = app.add_subcommand("plotdata", "emit plot series (data only)");
    add_common(plot, c);
    plot->add_option("--series", c.series, "contractivity | dct | scatter")->required();
    plot->add_option("--p", c.p_values, "exponents p (contractivity)");
    plot->add_option("--eps-max", c.eps_max, "largest eps (contractivity)")->capture_default_str();
    plot->add_option("--points", c.points, "grid points (contractivity)")->capture_default_str();
    plot->add_option("--k-max", c.k_max, "largest k (dct)")->capture_default_str();
    plot->add_option("--grid", c.grid, "cells of the dct discretisation")->capture_default_str();
    plot->callback([&] { run([&] { with_format(c, "csv"); cmd_plotdata(c); }); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitBadInput;
    }

    try {
        return action ? action() : kExitBadInput;
    } catch (const Error& e) {
        std::cerr << "lcelab: " << e.what() << "\n";
        if (e.code() == ErrorCode::IncompatibleCase) return kExitIncompatible;
        return kExitBadInput;
    } catch (const json::exception& e) {
        std::cerr << "lcelab: malformed JSON document: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << "lcelab: " << e.what() << "\n";
        return kExitFailedCheck;
    }
}
