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
 * @file cme.hpp
 * @brief Conditional mean embeddings as the LCE of feature-embedded data.
 *
 * Training points are mapped to finite coordinates through the symmetric PSD
 * square root S of their Gram matrix K: the feature of point j is row j of
 * S, so <phi(x_i), phi(x_j)> = (S S)_ij = K_ij. A query x is embedded by the
 * minimal-norm preimage c = S^dagger k(X, x); whatever part of phi(x) lies
 * outside the span of the training features is reported as a diagnostic.
 *
 * Centred moments are used throughout.
 */

#pragma once

#include <lcelab/lce.hpp>

#include <cmath>
#include <string>

namespace lcelab {

struct KernelSpec {
    enum class Family { GaussianRbf, Linear, Polynomial };

    Family family = Family::GaussianRbf;
    double lengthscale = 1.0; ///< gaussian-rbf
    double offset = 1.0;      ///< polynomial
    int degree = 2;           ///< polynomial

    static KernelSpec gaussian_rbf(double lengthscale) {
        return {Family::GaussianRbf, lengthscale, 1.0, 2};
    }
    static KernelSpec linear() { return {Family::Linear, 1.0, 0.0, 1}; }
    static KernelSpec polynomial(int degree, double offset) {
        return {Family::Polynomial, 1.0, offset, degree};
    }

    void validate() const {
        detail::require(std::isfinite(lengthscale) && lengthscale > 0.0, ErrorCode::InvalidInput,
                        "kernel: lengthscale must be > 0");
        detail::require(std::isfinite(offset), ErrorCode::InvalidInput,
                        "kernel: offset must be finite");
        detail::require(degree >= 1, ErrorCode::InvalidInput, "kernel: degree must be >= 1");
    }

    /// gaussian-rbf: exp(-|a-b|^2 / (2 l^2));  linear: a.b;  polynomial: (a.b + c)^d.
    double operator()(const Vector& a, const Vector& b) const {
        switch (family) {
        case Family::GaussianRbf:
            return std::exp(-(a - b).squaredNorm() / (2.0 * lengthscale * lengthscale));
        case Family::Linear: return a.dot(b);
        case Family::Polynomial: return std::pow(a.dot(b) + offset, degree);
        }
        return 0.0;
    }

    std::string family_name() const {
        switch (family) {
        case Family::GaussianRbf: return "gaussian-rbf";
        case Family::Linear: return "linear";
        case Family::Polynomial: return "polynomial";
        }
        return "unknown";
    }

    static Family parse_family(const std::string& name) {
        if (name == "gaussian-rbf" || name == "rbf" || name == "gaussian") return Family::GaussianRbf;
        if (name == "linear") return Family::Linear;
        if (name == "polynomial" || name == "poly") return Family::Polynomial;
        throw Error(ErrorCode::InvalidInput, "unknown kernel family '" + name + "'");
    }

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Cross-Gram matrix k(a_i, b_j) for point sets stored row-wise.
inline Matrix gram(const KernelSpec& spec, const Matrix& points_a, const Matrix& points_b) {
    spec.validate();
    detail::require(points_a.cols() == points_b.cols(), ErrorCode::DimensionMismatch,
                    "gram: point dimensions differ");
    Matrix k(points_a.rows(), points_b.rows());
    for (Eigen::Index i = 0; i < points_a.rows(); ++i) {
        const Vector a = points_a.row(i).transpose();
        for (Eigen::Index j = 0; j < points_b.rows(); ++j)
            k(i, j) = spec(a, points_b.row(j).transpose());
    }
    return k;
}

inline Matrix gram(const KernelSpec& spec, const Matrix& points) {
    Matrix k = gram(spec, points, points);
    return 0.5 * (k + k.transpose());
}

/// Symmetric square-root factor of a training Gram matrix.
struct FeatureFactor {
    Matrix root;      ///< S = K^{1/2}; row j holds the coordinates of point j
    Matrix root_pinv; ///< S^dagger
};

inline FeatureFactor feature_factor(const Matrix& k, const Tolerance& tol = {}) {
    const auto sd = spectral_decomposition(k, tol); // NotPsd beyond tolerance
    return {detail::spectral_function(sd, tol, [](double l) { return std::sqrt(l); }),
            detail::spectral_function(sd, tol, [](double l) { return 1.0 / std::sqrt(l); })};
}

/// The law of (phi(X), psi(Y)) for a law of (X, Y) given as atoms
/// (dist.v() = x points, dist.u() = y points).
inline FiniteJointDistribution embed_joint(const FiniteJointDistribution& dist,
                                           const KernelSpec& k_spec, const KernelSpec& l_spec,
                                           const Tolerance& tol = {}) {
    const Matrix phi = feature_factor(gram(k_spec, dist.v()), tol).root;
    const Matrix psi = feature_factor(gram(l_spec, dist.u()), tol).root;
    return {phi, psi, dist.weights()};
}

struct CmeModel {
    Matrix x_points;
    Matrix y_points;
    Vector weights;
    KernelSpec k_spec;
    KernelSpec l_spec;
    double eps = 0.0; ///< 0 selects the compatible (pseudo-inverse) fit
    FeatureFactor factor_x;
    FeatureFactor factor_y;
    LceResult lce; ///< operator from x-feature to y-feature coordinates
};

inline CmeModel cme_fit(const FiniteJointDistribution& dist, const KernelSpec& k_spec,
                        const KernelSpec& l_spec, const Regime& regime,
                        const Tolerance& tol = {}) {
    CmeModel model;
    model.x_points = dist.v();
    model.y_points = dist.u();
    model.weights = dist.weights();
    model.k_spec = k_spec;
    model.l_spec = l_spec;
    model.eps = regime.kind == Regime::Kind::Regularized ? regime.eps : 0.0;
    model.factor_x = feature_factor(gram(k_spec, dist.v()), tol);
    model.factor_y = feature_factor(gram(l_spec, dist.u()), tol);
    const FiniteJointDistribution embedded(model.factor_x.root, model.factor_y.root,
                                           dist.weights());
    model.lce = fit_lce(empirical_moments(embedded), regime, tol);
    return model;
}

/// eps == 0 fits the compatible LCE, eps > 0 the Tikhonov-regularised one.
inline CmeModel cme_fit(const FiniteJointDistribution& dist, const KernelSpec& k_spec,
                        const KernelSpec& l_spec, double eps, const Tolerance& tol = {}) {
    detail::require(std::isfinite(eps) && eps >= 0.0, ErrorCode::InvalidInput,
                    "cme_fit: eps must be >= 0");
    return cme_fit(dist, k_spec, l_spec, eps == 0.0 ? Regime::compatible() : Regime::regularized(eps),
                   tol);
}

struct FeatureCoordinates {
    Vector coords;
    double out_of_span = 0.0; ///< norm of the part of the feature outside the training span
};

/// Minimal-norm training-span coordinates of the feature of one point.
inline FeatureCoordinates embed_query(const KernelSpec& spec, const Matrix& train,
                                      const FeatureFactor& factor, const Vector& query) {
    detail::require(query.size() == train.cols(), ErrorCode::DimensionMismatch,
                    "cme: query dimension differs from training points");
    const Vector k_q = gram(spec, train, query.transpose()).col(0);
    FeatureCoordinates out;
    out.coords = factor.root_pinv * k_q;
    out.out_of_span = std::sqrt(std::max(0.0, spec(query, query) - out.coords.squaredNorm()));
    return out;
}

struct CmePrediction {
    Vector coords;            ///< predicted y-feature coordinates
    double out_of_span = 0.0; ///< of the x query
};

inline CmePrediction cme_predict(const CmeModel& model, const Vector& x_query) {
    const auto q = embed_query(model.k_spec, model.x_points, model.factor_x, x_query);
    return {model.lce.gamma(q.coords), q.out_of_span};
}

/// Estimate of E[l(g, Y) | X = x]: <psi(g), predicted embedding>.
inline double cme_expectation(const CmeModel& model, const Vector& g_query,
                              const Vector& x_query) {
    const auto g = embed_query(model.l_spec, model.y_points, model.factor_y, g_query);
    return g.coords.dot(cme_predict(model, x_query).coords);
}

} // namespace lcelab
