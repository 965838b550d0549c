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

// Seeded generators of finite laws for the property and acceptance suites.

#pragma once

#include <lcelab/moments.hpp>

#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace lcelab::testing {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
    bool coin() { return integer(0, 1) == 1; }

    Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }
    Vector normal_vector(Eigen::Index n) { return normal_matrix(n, 1).col(0); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

inline Matrix random_orthogonal(Rng& rng, Eigen::Index d) {
    Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(d, d));
    Matrix q = qr.householderQ();
    return q;
}

/// Random symmetric PSD matrix of the given rank.
inline Matrix random_psd(Rng& rng, Eigen::Index d, Eigen::Index rank) {
    const Matrix f = rng.normal_matrix(d, rank);
    Matrix c = f * f.transpose();
    return 0.5 * (c + c.transpose());
}

inline Vector random_weights(Rng& rng, Eigen::Index n) {
    Vector w(n);
    if (rng.coin()) {
        w.setConstant(1.0);
    } else {
        for (Eigen::Index i = 0; i < n; ++i) w(i) = rng.uniform(0.2, 1.0);
    }
    return w / w.sum();
}

/// A smooth nonlinear response of v plus independent noise, so that the
/// exact conditional expectation is not affine in general.
inline Matrix nonlinear_response(Rng& rng, const Matrix& v, Eigen::Index du, double noise) {
    const Eigen::Index dv = v.cols();
    const Matrix w1 = rng.normal_matrix(dv, du);
    const Matrix w2 = rng.normal_matrix(dv, du) / std::sqrt(static_cast<double>(dv));
    const Vector offset = rng.normal_vector(du);
    Matrix u = (v * w1).array().tanh().matrix() + 0.3 * (v * w2).array().square().matrix();
    u.rowwise() += offset.transpose();
    u += noise * rng.normal_matrix(v.rows(), du);
    return u;
}

struct LawOptions {
    int max_dim_v = 6;
    int max_dim_u = 6;
    int min_atoms = 2;
    int max_atoms = 60;
};

/// Random finite law: V is continuous, discrete with planted duplicates, or
/// supported on a lower-dimensional affine subspace; U is a noisy nonlinear
/// function of V; weights are uniform or random.
inline FiniteJointDistribution random_law(Rng& rng, const LawOptions& opt = {}) {
    const int dv = rng.integer(1, opt.max_dim_v);
    const int du = rng.integer(1, opt.max_dim_u);
    const int n = rng.integer(opt.min_atoms, opt.max_atoms);
    Matrix v;
    switch (rng.integer(0, 2)) {
    case 0: v = rng.normal_matrix(n, dv); break;
    case 1: {
        const int support = rng.integer(1, std::max(1, n / 2));
        const Matrix points = rng.normal_matrix(support, dv);
        v.resize(n, dv);
        for (int i = 0; i < n; ++i) v.row(i) = points.row(rng.integer(0, support - 1));
        break;
    }
    default: {
        const int latent = rng.integer(1, dv);
        v = rng.normal_matrix(n, latent) * rng.normal_matrix(latent, dv);
        break;
    }
    }
    v.rowwise() += rng.normal_vector(dv).transpose();
    const Matrix u = nonlinear_response(rng, v, du, rng.coin() ? 0.0 : 0.5);
    return {v, u, random_weights(rng, n)};
}

/// Law whose V takes few distinct values, each shared by several atoms, so
/// the exact conditional law of U given V is non-degenerate.
inline FiniteJointDistribution discrete_law(Rng& rng, const LawOptions& opt = {}) {
    const int dv = rng.integer(1, opt.max_dim_v);
    const int du = rng.integer(1, opt.max_dim_u);
    const int n = rng.integer(std::max(opt.min_atoms, 4), opt.max_atoms);
    const int support = rng.integer(2, std::max(2, n / 3));
    const Matrix points = rng.normal_matrix(support, dv);
    Matrix v(n, dv);
    for (int i = 0; i < n; ++i) v.row(i) = points.row(i % support);
    const Matrix u = nonlinear_response(rng, v, du, 0.7);
    return {v, u, random_weights(rng, n)};
}

/// V with sample covariance eigenvalues decaying like k^-4 in dimension d.
inline FiniteJointDistribution ill_conditioned_law(Rng& rng, Eigen::Index d = 50,
                                                   Eigen::Index atoms = 120, Eigen::Index du = 3) {
    Vector scale(d);
    for (Eigen::Index k = 0; k < d; ++k) scale(k) = 1.0 / std::pow(static_cast<double>(k + 1), 2.0);
    Matrix z = rng.normal_matrix(atoms, d);
    Matrix v = z * scale.asDiagonal() * random_orthogonal(rng, d).transpose();
    v.rowwise() += rng.normal_vector(d).transpose();
    const Matrix u = nonlinear_response(rng, 3.0 * v, du, 0.1);
    return FiniteJointDistribution::uniform(v, u);
}

/// Well-conditioned continuous law with more atoms than dimensions.
inline FiniteJointDistribution well_conditioned_law(Rng& rng) {
    const int dv = rng.integer(1, 4);
    const int du = rng.integer(1, 3);
    const int n = rng.integer(30, 60);
    const Matrix v = rng.normal_matrix(n, dv);
    return FiniteJointDistribution::uniform(v, nonlinear_response(rng, v, du, 0.3));
}

/// Law for which the truncated LCEs form a martingale. V = mu + H xi with H
/// orthogonal and latent coordinates built as a tree: xi_1 takes a few
/// standardised values, and every later coordinate splits each atom into
/// two equally likely children +-s_k(history). Hence
/// E[xi_k | xi_1..xi_{k-1}] = 0, Cov[xi] is diagonal with strictly
/// decreasing entries, and the leading eigenvectors of C_V are the leading
/// columns of H.
struct MartingaleLaw {
    FiniteJointDistribution dist;
    Matrix latent; ///< atoms x d, exact xi coordinates
};

inline MartingaleLaw martingale_law(Rng& rng, int d, int du) {
    const int roots = rng.integer(2, 4);
    Vector xi1 = rng.normal_vector(roots);
    Vector root_w(roots);
    for (int i = 0; i < roots; ++i) root_w(i) = rng.uniform(0.3, 1.0);
    root_w /= root_w.sum();
    const double mean = root_w.dot(xi1);
    const double sd = std::sqrt(root_w.dot((xi1.array() - mean).square().matrix()));
    xi1 = (xi1.array() - mean) / sd; // unit variance

    std::vector<std::vector<double>> nodes;
    std::vector<double> weights;
    for (int i = 0; i < roots; ++i) {
        nodes.push_back({xi1(i)});
        weights.push_back(root_w(i));
    }
    double c = 0.5;
    for (int k = 1; k < d; ++k, c *= 0.5) {
        std::vector<std::vector<double>> next;
        std::vector<double> next_w;
        for (std::size_t a = 0; a < nodes.size(); ++a) {
            const double s = c * (1.0 + 0.5 * std::tanh(std::abs(nodes[a][0]) + 0.3 * nodes[a].back()));
            for (double sign : {1.0, -1.0}) {
                auto child = nodes[a];
                child.push_back(sign * s);
                next.push_back(std::move(child));
                next_w.push_back(0.5 * weights[a]);
            }
        }
        nodes = std::move(next);
        weights = std::move(next_w);
    }

    const auto n = static_cast<Eigen::Index>(nodes.size());
    Matrix latent(n, d);
    Vector w(n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (int k = 0; k < d; ++k) latent(a, k) = nodes[static_cast<std::size_t>(a)][k];
        w(a) = weights[static_cast<std::size_t>(a)];
    }
    Matrix v = latent * random_orthogonal(rng, d).transpose();
    v.rowwise() += rng.normal_vector(d).transpose();
    const Matrix u = nonlinear_response(rng, latent, du, 0.0);
    return {FiniteJointDistribution(v, u, w / w.sum()), latent};
}

/// Runs `body(seed)` for seeds base, base+1, ..., base+count-1.
inline void for_seeds(std::uint64_t base, int count, const std::function<void(std::uint64_t)>& body) {
    for (int i = 0; i < count; ++i) body(base + static_cast<std::uint64_t>(i));
}

} // namespace lcelab::testing
