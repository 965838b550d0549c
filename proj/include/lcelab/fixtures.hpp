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
 * @file fixtures.hpp
 * @brief Exact reference laws with closed-form expected values: the basic
 * LCE/LCC example and the scalar counterexamples showing which properties of
 * the exact conditional expectation the LCE does not inherit (monotonicity,
 * triangle/Jensen, pulling out known factors, a tower property, Fatou's
 * lemma, L1-dominated convergence, Lp-contractivity for p != 2 and
 * non-negativity of the LCC).
 *
 * Every fixture computes its values through the public lce.hpp API and
 * compares them against the closed forms recorded here.
 */

#pragma once

#include <lcelab/lce.hpp>
#include <lcelab/verification.hpp>

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace lcelab {

enum class Relation { Equal, Less, Greater };

struct FixtureCheck {
    std::string label;
    std::string exact; ///< closed form of the expected value
    double computed = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    Relation relation = Relation::Equal;

    bool passed() const {
        switch (relation) {
        case Relation::Equal: return std::abs(computed - expected) <= tolerance;
        case Relation::Less: return computed < expected;
        case Relation::Greater: return computed > expected;
        }
        return false;
    }
    double deviation() const { return std::abs(computed - expected); }
};

struct FixtureParams {
    double contractivity_eps = 0.3;       ///< slopes are checked here
    double contractivity_sign_eps = 0.05; ///< f1, f2 signs are checked here
    double p_below = 1.0;                 ///< p < 2 for f1
    double p_above = 3.0;                 ///< p > 2 for f2
    double lcc_n = 3.0;                   ///< N of the negative-LCC law
    double dct_eps = 0.25;
    std::vector<int> dct_ks{3, 10, 70};
    Eigen::Index dct_grid = 1'000'000;
    double dct_grading = 0.0; ///< 0 selects the automatic exponent
    double exact_tol = 1e-10;
    double slope_tol = 1e-12;
    double dct_rel_tol = 0.01;
};

struct Fixture {
    std::string name;
    std::string source; ///< which property the law illustrates or refutes
    FiniteJointDistribution dist;
    std::function<std::vector<FixtureCheck>()> evaluate;
};

// ---------------------------------------------------------------------------
// Closed forms shared with the plot-data emitter.

/// (1 + e^2)^p - (1 + e^p); negative means Lp-contractivity fails for U1.
inline double contractivity_f1(double eps, double p) {
    return std::pow(1.0 + eps * eps, p) - (1.0 + std::pow(eps, p));
}

/// (1 + e^2)^p (1 + 2^p e^p) - (1 + 2 e^2)^p (1 + e^p); same role for U2.
inline double contractivity_f2(double eps, double p) {
    return std::pow(1.0 + eps * eps, p) * (1.0 + std::pow(2.0, p) * std::pow(eps, p)) -
           std::pow(1.0 + 2.0 * eps * eps, p) * (1.0 + std::pow(eps, p));
}

inline double dct_alpha(double eps) { return 1.0 / (2.0 + 2.0 * eps); }
inline double dct_beta(double eps) { return 3.0 * dct_alpha(eps) - 1.0; }

/// Continuum slope of E^A[U_k|V] = a_k V for the dominated-convergence law.
inline double dct_slope_closed_form(double eps, double k) {
    const double beta = dct_beta(eps);
    return (std::pow(2.0, beta) - 1.0) * eps / (beta * (1.0 + eps)) * std::pow(k, beta);
}

/// Discretisation of the uniform law on [-1, 1] used by the dominated
/// convergence counterexample. Each half is split into cells that are uniform
/// in s with 1 - |omega| = s^grading; atoms sit at the cell midpoints in s
/// and carry the exact cell probability. grading = 1 is the plain midpoint
/// rule in omega. The graded cells resolve the |omega| -> 1 singularity of
/// V^2, which the plain rule underestimates by several percent at 10^6 cells.
///
/// x = 1 - |omega| is the distance to the nearest endpoint. With
/// `shifted == false`:  V = sign * x^-alpha, U_k = sign * x^-2alpha on
/// x in [1/(2k), 1/k];  with `shifted == true` both profiles have 1
/// subtracted before the sign (V and U_k vanish at omega = 0).
struct DctGrid {
    double eps = 0.0;
    bool shifted = false;
    Vector x;      ///< distance to the nearest endpoint, per atom
    Vector sign;   ///< +1 on the left half, -1 on the right half
    Vector weight; ///< cell probability
    Matrix v;      ///< atoms x 1
};

inline double dct_auto_grading(double eps) {
    // Makes x^-2alpha dx uniform in s: grading (1 - 2 alpha) = 1.
    const double g = std::ceil((1.0 + eps) / eps - 1e-9);
    return std::clamp(g, 1.0, 32.0);
}

inline DctGrid make_dct_grid(double eps, Eigen::Index cells, double grading = 0.0,
                             bool shifted = false) {
    detail::require(eps > 0.0 && std::isfinite(eps), ErrorCode::InvalidInput,
                    "dct grid: eps must be > 0");
    detail::require(cells >= 2 && cells % 2 == 0, ErrorCode::InvalidInput,
                    "dct grid: cell count must be even and >= 2");
    if (grading <= 0.0) grading = dct_auto_grading(eps);
    const double alpha = dct_alpha(eps);
    const Eigen::Index half = cells / 2;
    const double h = 1.0 / static_cast<double>(half);

    DctGrid g;
    g.eps = eps;
    g.shifted = shifted;
    g.x.resize(cells);
    g.sign.resize(cells);
    g.weight.resize(cells);
    g.v.resize(cells, 1);
    for (Eigen::Index i = 0; i < half; ++i) {
        const double s_lo = static_cast<double>(i) * h;
        const double s_hi = static_cast<double>(i + 1) * h;
        const double s_mid = (static_cast<double>(i) + 0.5) * h;
        const double x = std::pow(s_mid, grading);
        const double w = 0.5 * (std::pow(s_hi, grading) - std::pow(s_lo, grading));
        const double profile = std::pow(x, -alpha) - (shifted ? 1.0 : 0.0);
        // left half (omega = x - 1) and its mirror image (omega = 1 - x)
        g.x(i) = x;
        g.sign(i) = 1.0;
        g.weight(i) = w;
        g.v(i, 0) = profile;
        g.x(cells - 1 - i) = x;
        g.sign(cells - 1 - i) = -1.0;
        g.weight(cells - 1 - i) = w;
        g.v(cells - 1 - i, 0) = -profile;
    }
    g.weight /= g.weight.sum();
    return g;
}

inline Matrix dct_u(const DctGrid& g, int k) {
    const double alpha = dct_alpha(g.eps);
    const double lo = 1.0 / (2.0 * k);
    const double hi = 1.0 / static_cast<double>(k);
    Matrix u = Matrix::Zero(g.x.size(), 1);
    for (Eigen::Index i = 0; i < g.x.size(); ++i) {
        const double x = g.x(i);
        if (x >= lo && x <= hi)
            u(i, 0) = g.sign(i) * (std::pow(x, -2.0 * alpha) - (g.shifted ? 1.0 : 0.0));
    }
    return u;
}

/// Slope of the LCE of U_k given V on the discretised law.
inline double dct_slope_discrete(const DctGrid& g, int k) {
    const FiniteJointDistribution dist(g.v, dct_u(g, k), g.weight);
    return lce_compatible(empirical_moments(dist)).gamma.a(0, 0);
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

inline FiniteJointDistribution scalar_law(std::initializer_list<double> v,
                                          std::initializer_list<double> u) {
    Matrix vm(static_cast<Eigen::Index>(v.size()), 1);
    Matrix um(static_cast<Eigen::Index>(u.size()), 1);
    Eigen::Index i = 0;
    for (double x : v) vm(i++, 0) = x;
    i = 0;
    for (double x : u) um(i++, 0) = x;
    return FiniteJointDistribution::uniform(std::move(vm), std::move(um));
}

inline AffineOperator scalar_lce(const Matrix& v, const Matrix& u) {
    return lce_compatible(empirical_moments(FiniteJointDistribution::uniform(v, u))).gamma;
}

inline FixtureCheck equal(std::string label, std::string exact, double computed,
                          double expected, double tol) {
    return {std::move(label), std::move(exact), computed, expected, tol, Relation::Equal};
}

inline FixtureCheck below(std::string label, double computed, double bound) {
    return {std::move(label), "< " + fmt(bound), computed, bound, 0.0, Relation::Less};
}

inline FixtureCheck above(std::string label, double computed, double bound) {
    return {std::move(label), "> " + fmt(bound), computed, bound, 0.0, Relation::Greater};
}

inline Fixture example_fixture(const FixtureParams& p) {
    auto dist = scalar_law({0, 0, 1, 1}, {1, -1, 2, -2});
    auto eval = [dist, tol = 1e-12]() {
        std::vector<FixtureCheck> out;
        const auto m = empirical_moments(dist);
        const auto gamma = lce_compatible(m).gamma;
        out.push_back(equal("LCE slope", "0", gamma.a(0, 0), 0.0, tol));
        out.push_back(equal("LCE intercept", "0", gamma.b(0), 0.0, tol));
        const auto field = lcc(dist);
        out.push_back(equal("LCC at v=0", "1", field(Vector::Constant(1, 0.0))(0, 0), 1.0, tol));
        out.push_back(equal("LCC at v=1", "4", field(Vector::Constant(1, 1.0))(0, 0), 4.0, tol));
        out.push_back(equal("ALCC", "5/2", alcc(TripleMoments::with_w_equal_u(m))(0, 0), 2.5,
                            tol));
        const auto ccov = exact_ccov(dist);
        out.push_back(equal("Cov[U|V=0]", "1", ccov.entries[0].value(0, 0), 1.0, tol));
        out.push_back(equal("Cov[U|V=1]", "4", ccov.entries[1].value(0, 0), 4.0, tol));
        const auto cef = exact_cef(dist);
        out.push_back(equal("E[U|V=0]", "0", cef.entries[0].value(0, 0), 0.0, tol));
        out.push_back(equal("E[U|V=1]", "0", cef.entries[1].value(0, 0), 0.0, tol));
        return out;
    };
    (void)p;
    return {"example_3_1", "basic LCE / LCC / ALCC example", dist, eval};
}

inline Fixture monotonicity_fixture(const FixtureParams& p) {
    auto dist = scalar_law({-1, 0, 1}, {1, 0, 1}); // U2 = |V|
    auto eval = [dist, tol = p.exact_tol]() {
        std::vector<FixtureCheck> out;
        const Matrix& v = dist.v();
        const Matrix v_sq = v.cwiseProduct(v);
        const auto g1 = scalar_lce(v, v);
        const auto g2 = scalar_lce(v, dist.u());
        const auto g_abs = scalar_lce(v, v.cwiseAbs());
        const auto g_pull = scalar_lce(v, v_sq); // E^A[f(V) U1 | V] with f(x) = x
        auto at = [](const AffineOperator& g, double x) { return g(Vector::Constant(1, x))(0); };

        out.push_back(equal("E^A[U1|V] slope", "1", g1.a(0, 0), 1.0, tol));
        out.push_back(equal("E^A[U1|V] intercept", "0", g1.b(0), 0.0, tol));
        out.push_back(equal("E^A[|V| |V] slope", "0", g2.a(0, 0), 0.0, tol));
        out.push_back(equal("E^A[|V| |V] intercept", "2/3", g2.b(0), 2.0 / 3.0, tol));
        // U2 >= U1 everywhere, yet the LCEs are ordered the other way at v = 1.
        const double gap = at(g2, 1.0) - at(g1, 1.0);
        out.push_back(equal("monotonicity gap at v=1", "-1/3", gap, -1.0 / 3.0, tol));
        out.push_back(below("monotonicity gap at v=1 (sign)", gap, 0.0));
        // |E^A[U1|V]| <= E^A[|U1| | V] fails at v = -1 (triangle and Jensen).
        const double tri = std::abs(at(g1, -1.0)) - at(g_abs, -1.0);
        out.push_back(equal("triangle/Jensen excess at v=-1", "1/3", tri, 1.0 / 3.0, tol));
        out.push_back(above("triangle/Jensen excess at v=-1 (sign)", tri, 0.0));
        // E^A[V U1 | V] at v = 0 is 2/3, while V E^A[U1|V] vanishes there.
        const double pull = at(g_pull, 0.0) - 0.0 * at(g1, 0.0);
        out.push_back(equal("pull-out mismatch at v=0", "2/3", pull, 2.0 / 3.0, tol));
        return out;
    };
    return {"monotonicity", "monotonicity / triangle / Jensen / pulling out known factors", dist,
            eval};
}

inline Fixture wrong_tower_fixture(const FixtureParams& p) {
    auto dist = scalar_law({-1, 0, 1}, {1, 0, 1});
    auto eval = [dist, tol = p.exact_tol]() {
        std::vector<FixtureCheck> out;
        const Matrix w = dist.v().cwiseAbs();
        const auto g2 = scalar_lce(dist.v(), dist.u());
        const Matrix inner = g2.apply_rows(dist.v()); // E^A[U2|V] at each atom
        const auto nested = scalar_lce(w, inner);
        const auto direct = scalar_lce(w, dist.u());
        out.push_back(equal("E^A[E^A[U2|V]|W] slope", "0", nested.a(0, 0), 0.0, tol));
        out.push_back(equal("E^A[E^A[U2|V]|W] intercept", "2/3", nested.b(0), 2.0 / 3.0, tol));
        out.push_back(equal("E^A[U2|W] slope", "1", direct.a(0, 0), 1.0, tol));
        out.push_back(equal("E^A[U2|W] intercept", "0", direct.b(0), 0.0, tol));
        const double diff = nested(Vector::Constant(1, 0.0))(0) - direct(Vector::Constant(1, 0.0))(0);
        out.push_back(equal("tower mismatch at W=0", "2/3", diff, 2.0 / 3.0, tol));
        return out;
    };
    return {"wrong_tower", "tower property E^A[E^A[U|V]|W] = E^A[U|W] fails", dist, eval};
}

inline Fixture fatou_fixture(const FixtureParams& p) {
    auto dist = scalar_law({-1, 0, 1}, {0, 0, 1}); // U_{2k+1}; U_{2k} mirrors it
    auto eval = [dist, tol = p.exact_tol]() {
        std::vector<FixtureCheck> out;
        constexpr int kTerms = 20;
        const Matrix& v = dist.v();
        Matrix odd(3, 1), even(3, 1);
        odd << 0, 0, 1;
        even << 1, 0, 0;
        Vector tail_min = Vector::Constant(3, std::numeric_limits<double>::infinity());
        for (int k = 1; k <= kTerms; ++k) {
            const Matrix fitted = scalar_lce(v, k % 2 ? odd : even).apply_rows(v);
            if (k > kTerms / 2) tail_min = tail_min.cwiseMin(fitted.col(0));
        }
        // liminf_k U_k = 0 pointwise, so E^A[liminf U_k | V] = 0.
        const auto liminf_lce = scalar_lce(v, Matrix::Zero(3, 1)).apply_rows(v);
        const double expected[3] = {-1.0 / 6.0, 2.0 / 6.0, -1.0 / 6.0};
        const char* exact[3] = {"-1/6", "1/3", "-1/6"};
        for (int i = 0; i < 3; ++i)
            out.push_back(equal("liminf E^A[U_k|V] at v=" + fmt(v(i, 0)), exact[i], tail_min(i),
                                expected[i], tol));
        for (int i : {0, 2})
            out.push_back(below("liminf E^A[U_k|V] - E^A[liminf U_k|V] at v=" + fmt(v(i, 0)),
                                tail_min(i) - liminf_lce(i, 0), 0.0));
        return out;
    };
    return {"fatou", "Fatou's lemma fails", dist, eval};
}

inline Fixture dct_fixture(const FixtureParams& p) {
    auto grid = std::make_shared<DctGrid>(make_dct_grid(p.dct_eps, p.dct_grid, p.dct_grading));
    const int k0 = p.dct_ks.empty() ? 1 : p.dct_ks.front();
    FiniteJointDistribution dist(grid->v, dct_u(*grid, k0), grid->weight);
    auto eval = [grid, p]() {
        std::vector<FixtureCheck> out;
        std::vector<double> slopes;
        for (int k : p.dct_ks) {
            const double a = dct_slope_discrete(*grid, k);
            const double expected = dct_slope_closed_form(p.dct_eps, k);
            slopes.push_back(a);
            out.push_back(equal("a_k at k=" + std::to_string(k),
                                "(2^b-1) e k^b / (b (1+e)) = " + fmt(expected), a, expected,
                                p.dct_rel_tol * std::abs(expected)));
        }
        for (std::size_t i = 1; i < slopes.size(); ++i)
            out.push_back(above("a_k increment k=" + std::to_string(p.dct_ks[i - 1]) + "->" +
                                    std::to_string(p.dct_ks[i]),
                                slopes[i] - slopes[i - 1], 0.0));
        return out;
    };
    return {"dct_l1", "L1-dominated convergence fails (a_k grows like k^beta)", std::move(dist),
            eval};
}

inline Fixture contractivity_fixture(const FixtureParams& p) {
    auto law = [](double e) {
        Matrix v(4, 1), u(4, 2);
        v << -1, -e, e, 1;
        u << -1, -1, 0, -2 * e, 0, 2 * e, 1, 1;
        return FiniteJointDistribution::uniform(v, u);
    };
    auto dist = law(p.contractivity_eps);
    auto eval = [law, p]() {
        std::vector<FixtureCheck> out;
        const double e = p.contractivity_eps;
        const auto d = law(e);
        const auto g = lce_compatible(empirical_moments(d)).gamma; // both outputs at once
        out.push_back(equal("a1", "1/(1+e^2)", g.a(0, 0), 1.0 / (1.0 + e * e), p.slope_tol));
        out.push_back(equal("a2", "(1+2e^2)/(1+e^2)", g.a(1, 0),
                            (1.0 + 2.0 * e * e) / (1.0 + e * e), p.slope_tol));
        out.push_back(equal("b1", "0", g.b(0), 0.0, p.slope_tol));
        out.push_back(equal("b2", "0", g.b(1), 0.0, p.slope_tol));

        // Recover f1, f2 from the fitted LCE at the small parameter:
        //   E|U1|^p - E|g1(V)|^p = a1^p f1 / 2
        //   E|U2|^p - E|g2(V)|^p = f2 / (2 (1+e^2)^p)
        const double s = p.contractivity_sign_eps;
        const auto ds = law(s);
        const auto gs = lce_compatible(empirical_moments(ds)).gamma;
        const Matrix fitted = gs.apply_rows(ds.v());
        auto moment = [&](const Matrix& x, int col, double pw) {
            return ds.weights().dot(x.col(col).cwiseAbs().array().pow(pw).matrix());
        };
        const double p1 = p.p_below;
        const double p2 = p.p_above;
        const double f1 = 2.0 * (moment(ds.u(), 0, p1) - moment(fitted, 0, p1)) /
                          std::pow(gs.a(0, 0), p1);
        const double f2 = 2.0 * std::pow(1.0 + s * s, p2) *
                          (moment(ds.u(), 1, p2) - moment(fitted, 1, p2));
        out.push_back(equal("f1(e_small; p_below)", "(1+e^2)^p-(1+e^p)", f1,
                            contractivity_f1(s, p1), p.exact_tol));
        out.push_back(below("f1(e_small; p_below) (sign)", f1, 0.0));
        out.push_back(equal("f2(e_small; p_above)", "(1+e^2)^p(1+2^p e^p)-(1+2e^2)^p(1+e^p)", f2,
                            contractivity_f2(s, p2), p.exact_tol));
        out.push_back(below("f2(e_small; p_above) (sign)", f2, 0.0));
        return out;
    };
    return {"contractivity", "Lp-contractivity fails for p != 2", std::move(dist), eval};
}

inline Fixture negative_lcc_fixture(const FixtureParams& p) {
    const double n = p.lcc_n;
    auto dist = scalar_law({-1, -1, 0, 0, 1, 1}, {1, -1, 1, -1, n, -n});
    auto eval = [dist, n, tol = p.exact_tol]() {
        std::vector<FixtureCheck> out;
        const auto field = lcc(dist);
        const double n2 = n * n;
        auto at = [&](double x) { return field(Vector::Constant(1, x))(0, 0); };
        out.push_back(equal("LCC slope", "(N^2-1)/2", field.slope(0, 0, 0), 0.5 * (n2 - 1.0), tol));
        out.push_back(equal("LCC mean (ALCC)", "(N^2+2)/3", field.base(0, 0), (n2 + 2.0) / 3.0, tol));
        out.push_back(equal("LCC at v=-1", "(7-N^2)/6", at(-1.0), (7.0 - n2) / 6.0, tol));
        out.push_back(equal("LCC at v=0", "(2+N^2)/3", at(0.0), (2.0 + n2) / 3.0, tol));
        out.push_back(equal("LCC at v=1", "(1+5N^2)/6", at(1.0), (1.0 + 5.0 * n2) / 6.0, tol));
        if (n2 > 7.0) out.push_back(below("LCC at v=-1 (sign)", at(-1.0), 0.0));
        return out;
    };
    return {"negative_lcc", "the LCC can be negative (N = " + fmt(n) + ")", std::move(dist), eval};
}

} // namespace detail

/// The seven reference fixtures, in a fixed order.
inline std::vector<Fixture> fixtures(const FixtureParams& p = {}) {
    std::vector<Fixture> out;
    out.push_back(detail::example_fixture(p));
    out.push_back(detail::monotonicity_fixture(p));
    out.push_back(detail::wrong_tower_fixture(p));
    out.push_back(detail::fatou_fixture(p));
    out.push_back(detail::dct_fixture(p));
    out.push_back(detail::contractivity_fixture(p));
    out.push_back(detail::negative_lcc_fixture(p));
    return out;
}

inline std::vector<std::string> fixture_names() {
    return {"example_3_1", "monotonicity", "wrong_tower", "fatou",
            "dct_l1",      "contractivity", "negative_lcc"};
}

/// Builds only the named fixture (the DCT law is large).
inline Fixture fixture(const std::string& name, const FixtureParams& p = {}) {
    if (name == "example_3_1") return detail::example_fixture(p);
    if (name == "monotonicity") return detail::monotonicity_fixture(p);
    if (name == "wrong_tower") return detail::wrong_tower_fixture(p);
    if (name == "fatou") return detail::fatou_fixture(p);
    if (name == "dct_l1") return detail::dct_fixture(p);
    if (name == "contractivity") return detail::contractivity_fixture(p);
    if (name == "negative_lcc") return detail::negative_lcc_fixture(p);
    throw Error(ErrorCode::InvalidInput, "unknown fixture '" + name + "'");
}

} // namespace lcelab
