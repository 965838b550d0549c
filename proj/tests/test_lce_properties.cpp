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

// Property suites over seeded random laws. The same routines back the
// acceptance report; here every family is its own test for readable failures.

#include "support/criteria.hpp"

#include <gtest/gtest.h>

namespace {

using namespace lcelab;
using namespace lcelab::testing;

void expect_pass(const CriterionResult& r) {
    EXPECT_GT(r.checks, 0);
    EXPECT_EQ(r.failures, 0) << r.first_failure;
}

TEST(OracleEquivalence, FiveHundredRandomLaws) { expect_pass(criterion_oracle(500)); }

TEST(LceInvariants, ResidualsAreCentredAndUncorrelated) { expect_pass(invariant_residuals()); }
TEST(LceInvariants, TotalExpectation) { expect_pass(invariant_total_expectation()); }
TEST(LceInvariants, TotalCovarianceAndOrdering) { expect_pass(invariant_total_covariance()); }
TEST(LceInvariants, Stability) { expect_pass(invariant_stability()); }
TEST(LceInvariants, Linearity) { expect_pass(invariant_linearity()); }
TEST(LceInvariants, SelfAdjointness) { expect_pass(invariant_self_adjointness()); }
TEST(LceInvariants, IndependentBlocks) { expect_pass(invariant_independence()); }
TEST(LceInvariants, TowerWithNestedInformation) { expect_pass(invariant_tower()); }
TEST(LceInvariants, TruncationsFormAMartingale) { expect_pass(invariant_martingale()); }

TEST(Truncation, MonotoneAndOptimalOnIllConditionedLaws) { expect_pass(criterion_truncation(50)); }

TEST(Truncation, MonotoneOnSmallRandomLaws) {
    for_seeds(300, 100, [](std::uint64_t seed) {
        Rng rng(seed);
        const auto d = random_law(rng);
        const auto m = empirical_moments(d);
        double previous = std::numeric_limits<double>::infinity();
        for (Eigen::Index n = 1; n <= d.dim_v(); ++n) {
            const double f = functional_value(d, lce_truncated(m, n).gamma);
            EXPECT_LE(f, previous + 1e-12 * std::max(1.0, f)) << "seed " << seed << " n " << n;
            previous = f;
        }
        EXPECT_NEAR(previous, functional_value(d, lce_compatible(m).gamma),
                    1e-10 * std::max(1.0, previous));
    });
}

TEST(Regularized, OptimalityAndVanishingEps) { expect_pass(criterion_regularized()); }

TEST(Regularized, StationarityOfTheObjective) {
    // Gradient of E|U - AV - b|^2 + eps |A|_F^2 vanishes at the fit.
    for_seeds(900, 100, [](std::uint64_t seed) {
        Rng rng(seed);
        const auto d = random_law(rng);
        const double eps = rng.uniform(1e-3, 1.0);
        const auto g = lce_regularized(empirical_moments(d), eps).gamma;
        const Matrix resid = d.u() - g.apply_rows(d.v());
        const Matrix grad_a = -2.0 * resid.transpose() * d.weights().asDiagonal() * d.v() + 2.0 * eps * g.a;
        const Vector grad_b = -2.0 * resid.transpose() * d.weights();
        EXPECT_LE(grad_a.norm(), 1e-9 * scale_of(d.u()) * scale_of(d.v())) << "seed " << seed;
        EXPECT_LE(grad_b.norm(), 1e-9 * scale_of(d.u())) << "seed " << seed;
    });
}

TEST(Alcc, PsdMeanOfLccAndDominance) { expect_pass(criterion_alcc()); }

TEST(Appendix, DouglasAndBaker) { expect_pass(criterion_appendix()); }

} // namespace
