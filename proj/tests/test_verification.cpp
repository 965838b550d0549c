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

#include <lcelab/fixtures.hpp>
#include <lcelab/verification.hpp>

#include "support/criteria.hpp"

#include <gtest/gtest.h>

namespace {

using namespace lcelab;
using namespace lcelab::testing;

TEST(ExactConditional, ExampleLaw) {
    const auto d = scalar_law({0, 0, 1, 1}, {1, -1, 2, -2});
    const auto cef = exact_cef(d);
    ASSERT_EQ(cef.entries.size(), 2u);
    EXPECT_DOUBLE_EQ(cef.entries[0].v(0), 0.0);
    EXPECT_DOUBLE_EQ(cef.entries[0].prob, 0.5);
    EXPECT_DOUBLE_EQ(cef.entries[0].value(0, 0), 0.0);
    const auto ccov = exact_ccov(d);
    EXPECT_DOUBLE_EQ(ccov.entries[0].value(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(ccov.entries[1].value(0, 0), 4.0);
    EXPECT_DOUBLE_EQ(expected_conditional_covariance(d)(0, 0), 2.5);
    EXPECT_EQ(cef.at_atom(3).v(0), 1.0);
}

TEST(ExactConditional, WeightedGroups) {
    Matrix v(3, 1), u(3, 1);
    v << 2, 2, 5;
    u << 0, 4, 1;
    Vector w(3);
    w << 0.1, 0.3, 0.6;
    const FiniteJointDistribution d(v, u, w);
    const Matrix at = cef_at_atoms(d);
    EXPECT_NEAR(at(0, 0), 3.0, 1e-15);
    EXPECT_NEAR(at(1, 0), 3.0, 1e-15);
    EXPECT_NEAR(at(2, 0), 1.0, 1e-15);
    // Cov[U|V=2] = 0.25 * 9 + 0.75 * 1 = 3
    EXPECT_NEAR(exact_ccov(d).entries[0].value(0, 0), 3.0, 1e-14);
    EXPECT_NEAR(expected_conditional_covariance(d)(0, 0), 0.4 * 3.0, 1e-14);
}

TEST(ExactConditional, ZeroWeightGroupIsHarmless) {
    Matrix v(3, 1), u(3, 1);
    v << 0, 1, 1;
    u << 5, 2, 4;
    Vector w(3);
    w << 1.0, 0.0, 0.0;
    const FiniteJointDistribution d(v, u, w);
    const auto cef = exact_cef(d);
    EXPECT_DOUBLE_EQ(cef.entries[1].prob, 0.0);
    EXPECT_DOUBLE_EQ(cef.entries[1].value(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(expected_conditional_covariance(d)(0, 0), 0.0);
}

TEST(ExactConditional, AffineCefIsReproducedByTheLce) {
    // U = B V + c + noise with E[noise | V] = 0: the LCE equals the CEF.
    for_seeds(70, 50, [](std::uint64_t seed) {
        Rng rng(seed);
        const int dv = rng.integer(1, 3);
        const int du = rng.integer(1, 3);
        const int support = rng.integer(dv + 1, dv + 5);
        const Matrix points = rng.normal_matrix(support, dv);
        const AffineOperator truth{rng.normal_matrix(du, dv), rng.normal_vector(du)};
        Matrix v(2 * support, dv), u(2 * support, du);
        for (int i = 0; i < support; ++i) {
            const Vector noise = rng.normal_vector(du);
            const Vector mean = truth(points.row(i).transpose());
            v.row(2 * i) = v.row(2 * i + 1) = points.row(i);
            u.row(2 * i) = (mean + noise).transpose();
            u.row(2 * i + 1) = (mean - noise).transpose();
        }
        const auto d = FiniteJointDistribution::uniform(v, u);
        const auto g = lce_compatible(empirical_moments(d)).gamma;
        EXPECT_LE((g.apply_rows(v) - cef_at_atoms(d)).norm(), 1e-10 * scale_of(u)) << seed;
    });
}

TEST(LeastSquaresOracle, RecoversAnExactAffineMap) {
    Rng rng(3);
    const Matrix v = rng.normal_matrix(20, 3);
    const AffineOperator truth{rng.normal_matrix(2, 3), rng.normal_vector(2)};
    const auto o = least_squares_oracle(FiniteJointDistribution::uniform(v, truth.apply_rows(v)));
    EXPECT_LE((o.a - truth.a).norm(), 1e-10);
    EXPECT_LE((o.b - truth.b).norm(), 1e-10);
}

TEST(LeastSquaresOracle, ConstantV) {
    Matrix v = Matrix::Constant(4, 1, 2.0);
    Matrix u(4, 1);
    u << 1, 2, 3, 6;
    const auto o = least_squares_oracle(FiniteJointDistribution::uniform(v, u));
    EXPECT_NEAR(o(Vector::Constant(1, 2.0))(0), 3.0, 1e-12);
}

TEST(Fixtures, AllPassWithDefaults) {
    const auto all = fixtures();
    ASSERT_EQ(all.size(), fixture_names().size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        EXPECT_EQ(all[i].name, fixture_names()[i]);
        for (const auto& chk : all[i].evaluate())
            EXPECT_TRUE(chk.passed()) << all[i].name << ": " << chk.label << " computed "
                                      << chk.computed << " expected " << chk.expected;
    }
}

TEST(Fixtures, LookupByName) {
    EXPECT_EQ(fixture("fatou").name, "fatou");
    EXPECT_THROW((void)fixture("no-such-fixture"), Error);
}

TEST(Fixtures, NegativeLccDependsOnN) {
    FixtureParams p;
    p.lcc_n = 2.0; // (7 - N^2) / 6 > 0: the field stays positive
    const auto checks = fixture("negative_lcc", p).evaluate();
    for (const auto& chk : checks) EXPECT_TRUE(chk.passed()) << chk.label;
    bool has_sign = false;
    for (const auto& chk : checks) has_sign = has_sign || chk.relation != Relation::Equal;
    EXPECT_FALSE(has_sign);
}

TEST(Fixtures, FailingCheckIsReported) {
    FixtureParams p;
    p.p_below = 3.0; // f1 is positive for p > 2
    bool any_failed = false;
    for (const auto& chk : fixture("contractivity", p).evaluate()) any_failed |= !chk.passed();
    EXPECT_TRUE(any_failed);
}

TEST(Contractivity, ClosedFormsAndSigns) {
    EXPECT_DOUBLE_EQ(contractivity_f1(0.0, 1.0), 0.0);
    EXPECT_GE(contractivity_f1(0.5, 2.0), 0.0); // p = 2 is contractive
    EXPECT_GE(contractivity_f2(0.5, 2.0), 0.0);
    EXPECT_LT(contractivity_f1(0.05, 1.0), 0.0);
    EXPECT_LT(contractivity_f2(0.05, 3.0), 0.0);
    EXPECT_GT(contractivity_f1(0.05, 3.0), 0.0);
}

TEST(DominatedConvergence, ExponentsAndClosedForm) {
    EXPECT_DOUBLE_EQ(dct_alpha(0.25), 0.4);
    EXPECT_NEAR(dct_beta(0.25), 0.2, 1e-15);
    EXPECT_NEAR(dct_slope_closed_form(0.25, 1.0), (std::pow(2.0, 0.2) - 1.0) * 0.25 / (0.2 * 1.25),
                1e-15);
    EXPECT_EQ(dct_auto_grading(0.25), 5.0);
    EXPECT_EQ(dct_auto_grading(1e-6), 32.0);
}

TEST(DominatedConvergence, GridIsAProbabilityLawWithZeroMean) {
    const auto g = make_dct_grid(0.25, 2000);
    EXPECT_NEAR(g.weight.sum(), 1.0, 1e-14);
    EXPECT_NEAR(g.weight.dot(g.v.col(0)), 0.0, 1e-12);
    EXPECT_TRUE((g.x.array() > 0.0).all() && (g.x.array() < 1.0).all());
    EXPECT_THROW((void)make_dct_grid(0.25, 3), Error);
    EXPECT_THROW((void)make_dct_grid(-1.0, 10), Error);
}

TEST(DominatedConvergence, GradedGridMatchesMomentsOfTheContinuum) {
    // x is uniform on (0, 1) in each half, so E[V^2] = int_0^1 x^-2alpha dx.
    const double eps = 0.25;
    const double alpha = dct_alpha(eps);
    const auto graded = make_dct_grid(eps, 200'000);
    const double exact = 1.0 / (1.0 - 2.0 * alpha);
    EXPECT_NEAR(graded.weight.dot(graded.v.col(0).cwiseAbs2()), exact, 1e-3 * exact);
    const auto uniform = make_dct_grid(eps, 200'000, 1.0);
    EXPECT_LT(uniform.weight.dot(uniform.v.col(0).cwiseAbs2()), 0.97 * exact);
}

TEST(DominatedConvergence, UnboundedSlopesOnBothProfiles) {
    for (bool shifted : {false, true}) {
        const auto g = make_dct_grid(0.25, 200'000, 0.0, shifted);
        double previous = -std::numeric_limits<double>::infinity();
        for (int k : {3, 10, 70, 300}) {
            const double a = dct_slope_discrete(g, k);
            EXPECT_GT(a, previous) << "shifted=" << shifted << " k=" << k;
            previous = a;
        }
    }
}

TEST(DominatedConvergence, SequenceIsDominatedAndVanishes) {
    const auto g = make_dct_grid(0.25, 20'000);
    const double alpha = dct_alpha(0.25);
    for (int k : {3, 10, 70}) {
        const Matrix u = dct_u(g, k);
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            EXPECT_LE(std::abs(u(i, 0)), std::pow(g.x(i), -2.0 * alpha) + 1e-12);
            if (g.x(i) > 1.0 / k) EXPECT_EQ(u(i, 0), 0.0);
        }
    }
}

} // namespace
