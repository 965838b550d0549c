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

#include <lcelab/cme.hpp>

#include "support/criteria.hpp"

#include <gtest/gtest.h>

namespace {

using namespace lcelab;
using namespace lcelab::testing;

TEST(KernelSpec, Values) {
    Vector a(2), b(2);
    a << 0, 0;
    b << 3, 4;
    EXPECT_DOUBLE_EQ(KernelSpec::gaussian_rbf(5.0)(a, b), std::exp(-0.5));
    EXPECT_DOUBLE_EQ(KernelSpec::gaussian_rbf(1.0)(b, b), 1.0);
    EXPECT_DOUBLE_EQ(KernelSpec::linear()(b, b), 25.0);
    EXPECT_DOUBLE_EQ(KernelSpec::polynomial(2, 1.0)(b, b), 26.0 * 26.0);
}

TEST(KernelSpec, ValidationAndNames) {
    EXPECT_THROW(KernelSpec::gaussian_rbf(0.0).validate(), Error);
    EXPECT_THROW(KernelSpec::polynomial(0, 1.0).validate(), Error);
    EXPECT_NO_THROW(KernelSpec::polynomial(3, 0.0).validate());
    EXPECT_EQ(KernelSpec::parse_family("rbf"), KernelSpec::Family::GaussianRbf);
    EXPECT_EQ(KernelSpec::parse_family("poly"), KernelSpec::Family::Polynomial);
    EXPECT_EQ(KernelSpec::parse_family("linear"), KernelSpec::Family::Linear);
    EXPECT_THROW((void)KernelSpec::parse_family("laplace"), Error);
    EXPECT_EQ(KernelSpec::gaussian_rbf(1.0).family_name(), "gaussian-rbf");
}

TEST(Gram, SymmetricPsd) {
    Rng rng(1);
    const Matrix x = rng.normal_matrix(15, 3);
    for (const auto& spec : {KernelSpec::gaussian_rbf(0.7), KernelSpec::linear(),
                             KernelSpec::polynomial(3, 1.0)}) {
        const Matrix k = gram(spec, x);
        EXPECT_EQ(k, k.transpose());
        EXPECT_GE(min_eigenvalue(k), -1e-9 * scale_of(k));
        EXPECT_LE((gram(spec, x, x) - k).norm(), 1e-12 * scale_of(k));
    }
}

TEST(FeatureFactor, RootAndPseudoInverse) {
    Rng rng(2);
    const Matrix x = rng.normal_matrix(12, 2);
    const Matrix k = gram(KernelSpec::linear(), x); // rank 2
    const auto f = feature_factor(k);
    EXPECT_LE((f.root * f.root - k).norm(), 1e-10 * scale_of(k));
    const Matrix p = f.root_pinv * f.root;
    EXPECT_LE((p * p - p).norm(), 1e-9);
    EXPECT_NEAR(p.trace(), 2.0, 1e-9);
}

TEST(EmbedQuery, TrainingPointsMapToTheirRows) {
    Rng rng(4);
    const Matrix x = rng.normal_matrix(10, 2);
    const auto spec = KernelSpec::gaussian_rbf(1.0);
    const auto f = feature_factor(gram(spec, x));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto q = embed_query(spec, x, f, x.row(i).transpose());
        EXPECT_LE((q.coords - f.root.row(i).transpose()).norm(), 1e-6);
        EXPECT_LE(q.out_of_span, 1e-3);
    }
    const auto far = embed_query(spec, x, f, Vector::Constant(2, 1e3));
    EXPECT_LE(far.coords.norm(), 1e-12);
    EXPECT_NEAR(far.out_of_span, 1.0, 1e-12);
    EXPECT_THROW((void)embed_query(spec, x, f, Vector::Zero(3)), Error);
}

TEST(CmeFit, LinearKernelsReduceToTheLce) {
    for_seeds(40, 20, [](std::uint64_t seed) {
        Rng rng(seed);
        const Matrix x = rng.normal_matrix(30, 2);
        const Matrix y = nonlinear_response(rng, x, 2, 0.3);
        const auto d = FiniteJointDistribution::uniform(x, y);
        const auto model = cme_fit(d, KernelSpec::linear(), KernelSpec::linear(), 0.0);
        const auto g = lce_compatible(empirical_moments(d)).gamma;
        for (int t = 0; t < 5; ++t) {
            const Vector q = rng.normal_vector(2);
            const Vector h = rng.normal_vector(2);
            EXPECT_NEAR(cme_expectation(model, h, q), h.dot(g(q)), 1e-8 * scale_of(y)) << seed;
        }
    });
}

TEST(CmeFit, RegimesAndErrors) {
    Rng rng(5);
    const auto law = alphabet_law(rng);
    EXPECT_THROW((void)cme_fit(law.dist, law.k, law.l, -1.0), Error);
    EXPECT_EQ(cme_fit(law.dist, law.k, law.l, 0.0).lce.regime.kind, Regime::Kind::Compatible);
    const auto reg = cme_fit(law.dist, law.k, law.l, 1e-3);
    EXPECT_EQ(reg.lce.regime.kind, Regime::Kind::Regularized);
    EXPECT_DOUBLE_EQ(reg.eps, 1e-3);
    const auto trunc = cme_fit(law.dist, law.k, law.l, Regime::truncated(2));
    EXPECT_EQ(trunc.lce.rank_used, 2);
}

TEST(CmeFit, ExactOnDiscreteAlphabets) { 
    const auto r = criterion_cme();
    EXPECT_GT(r.checks, 0);
    EXPECT_EQ(r.failures, 0) << r.first_failure;
}

TEST(CmeFit, ExpectationOfAKernelSectionIsAConditionalMean) {
    // With rbf on y, E[l(g, Y) | X = x] is a finite sum over the alphabet.
    Rng rng(6);
    const auto law = alphabet_law(rng);
    const auto model = cme_fit(law.dist, law.k, law.l, 0.0);
    const Vector g = law.dist.u_atom(0);
    Matrix lg(law.dist.size(), 1);
    for (Eigen::Index j = 0; j < law.dist.size(); ++j) lg(j, 0) = law.l(g, law.dist.u_atom(j));
    const Matrix exact = cef_at_atoms(FiniteJointDistribution(law.dist.v(), lg, law.dist.weights()));
    for (Eigen::Index j = 0; j < law.dist.size(); ++j)
        EXPECT_NEAR(cme_expectation(model, g, law.dist.v_atom(j)), exact(j, 0), 1e-6);
}

} // namespace
