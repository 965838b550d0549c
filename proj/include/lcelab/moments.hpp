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

#pragma once

#include <lcelab/linalg.hpp>

#include <cmath>
#include <optional>
#include <string>

namespace lcelab {

/// Exactly known joint law of (V, U): weighted atoms (v_j, u_j).
/// Atoms are stored row-wise; weights are normalised probabilities.
/// Duplicate atoms are kept as given.
class FiniteJointDistribution {
public:
    static constexpr double kWeightSumTolerance = 1e-12;

    FiniteJointDistribution(Matrix v_atoms, Matrix u_atoms, Vector weights)
        : v_(std::move(v_atoms)), u_(std::move(u_atoms)), w_(std::move(weights)) {
        detail::require(v_.rows() >= 1, ErrorCode::InvalidInput,
                        "distribution needs at least one atom");
        detail::require(u_.rows() == v_.rows() && w_.size() == v_.rows(),
                        ErrorCode::DimensionMismatch,
                        "distribution: atom and weight counts differ");
        detail::require(v_.allFinite() && u_.allFinite() && w_.allFinite(),
                        ErrorCode::InvalidInput, "distribution: non-finite coordinates");
        detail::require(w_.minCoeff() >= 0.0, ErrorCode::InvalidInput,
                        "distribution: negative weight");
        detail::require(std::abs(w_.sum() - 1.0) <= kWeightSumTolerance,
                        ErrorCode::InvalidInput, "distribution: weights do not sum to 1");
    }

    static FiniteJointDistribution uniform(Matrix v_atoms, Matrix u_atoms) {
        const auto n = v_atoms.rows();
        detail::require(n >= 1, ErrorCode::InvalidInput, "distribution needs at least one atom");
        Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
        return {std::move(v_atoms), std::move(u_atoms), std::move(w)};
    }

    const Matrix& v() const noexcept { return v_; }
    const Matrix& u() const noexcept { return u_; }
    const Vector& weights() const noexcept { return w_; }

    Eigen::Index size() const noexcept { return v_.rows(); }
    Eigen::Index dim_v() const noexcept { return v_.cols(); }
    Eigen::Index dim_u() const noexcept { return u_.cols(); }

    Vector v_atom(Eigen::Index j) const { return v_.row(j).transpose(); }
    Vector u_atom(Eigen::Index j) const { return u_.row(j).transpose(); }

private:
    Matrix v_;
    Matrix u_;
    Vector w_;
};

/// Means and (cross-)covariance operators of (U, V). With `centered == false`
/// the matrices hold the uncentred second moments E[U (x) V] instead.
struct JointMoments {
    Vector mu_u;
    Vector mu_v;
    Matrix c_u;
    Matrix c_v;
    Matrix c_uv; ///< dim_u x dim_v
    bool centered = true;

    Eigen::Index dim_u() const noexcept { return mu_u.size(); }
    Eigen::Index dim_v() const noexcept { return mu_v.size(); }
    Matrix c_vu() const { return c_uv.transpose(); }

    void check_shapes() const {
        const auto du = dim_u();
        const auto dv = dim_v();
        detail::require(c_u.rows() == du && c_u.cols() == du && c_v.rows() == dv &&
                            c_v.cols() == dv && c_uv.rows() == du && c_uv.cols() == dv,
                        ErrorCode::DimensionMismatch, "moments: inconsistent block shapes");
    }
};

/// gamma(v) = b + A v.
struct AffineOperator {
    Matrix a; ///< dim_out x dim_in, the non-affine part
    Vector b; ///< dim_out

    Eigen::Index dim_in() const noexcept { return a.cols(); }
    Eigen::Index dim_out() const noexcept { return a.rows(); }

    static AffineOperator identity(Eigen::Index dim) {
        return {Matrix::Identity(dim, dim), Vector::Zero(dim)};
    }
    static AffineOperator constant(Vector value, Eigen::Index dim_in) {
        const auto n = value.size();
        return {Matrix::Zero(n, dim_in), std::move(value)};
    }

    Vector operator()(const Vector& v) const {
        detail::require(v.size() == dim_in(), ErrorCode::DimensionMismatch,
                        "affine operator: input dimension mismatch");
        return b + a * v;
    }

    /// Applies the map to every row of `rows` (atoms x dim_in).
    Matrix apply_rows(const Matrix& rows) const {
        detail::require(rows.cols() == dim_in(), ErrorCode::DimensionMismatch,
                        "affine operator: input dimension mismatch");
        Matrix out = rows * a.transpose();
        out.rowwise() += b.transpose();
        return out;
    }

    /// psi after this map: v -> psi(gamma(v)).
    AffineOperator then(const AffineOperator& psi) const {
        detail::require(psi.dim_in() == dim_out(), ErrorCode::DimensionMismatch,
                        "affine operator: composition dimension mismatch");
        return {psi.a * a, psi.a * b + psi.b};
    }
};

/// Exact weighted moments of a finite law.
inline JointMoments empirical_moments(const FiniteJointDistribution& dist, bool centered = true) {
    const Vector& w = dist.weights();
    JointMoments m;
    m.centered = centered;
    if (centered) {
        // Shifted-data centring: deviations from the first atom first, so a
        // constant column gives exactly zero (co)variance.
        auto centre = [&w](const Matrix& x, Vector& mean) {
            const Vector shift = x.row(0).transpose();
            Matrix xc = x;
            xc.rowwise() -= shift.transpose();
            const Vector offset = xc.transpose() * w;
            xc.rowwise() -= offset.transpose();
            mean = shift + offset;
            return xc;
        };
        const Matrix vc = centre(dist.v(), m.mu_v);
        const Matrix uc = centre(dist.u(), m.mu_u);
        const Matrix wv = w.asDiagonal() * vc;
        m.c_v = vc.transpose() * wv;
        m.c_uv = uc.transpose() * wv;
        m.c_u = uc.transpose() * (w.asDiagonal() * uc);
    } else {
        m.mu_v = dist.v().transpose() * w;
        m.mu_u = dist.u().transpose() * w;
        const Matrix wv = w.asDiagonal() * dist.v();
        m.c_v = dist.v().transpose() * wv;
        m.c_uv = dist.u().transpose() * wv;
        m.c_u = dist.u().transpose() * (w.asDiagonal() * dist.u());
    }
    m.c_v = 0.5 * (m.c_v + m.c_v.transpose()).eval();
    m.c_u = 0.5 * (m.c_u + m.c_u.transpose()).eval();
    return m;
}

/// Builds a law from sample rows; weights (if given) are normalised to sum 1.
inline FiniteJointDistribution moments_from_samples(Matrix v_rows, Matrix u_rows,
                                                    const std::optional<Vector>& weights = {}) {
    detail::require(v_rows.rows() >= 1, ErrorCode::InvalidInput, "no sample rows");
    detail::require(u_rows.rows() == v_rows.rows(), ErrorCode::DimensionMismatch,
                    "v and u row counts differ");
    if (!weights) return FiniteJointDistribution::uniform(std::move(v_rows), std::move(u_rows));

    detail::require(weights->size() == v_rows.rows(), ErrorCode::DimensionMismatch,
                    "weight count differs from row count");
    detail::require(weights->allFinite(), ErrorCode::InvalidInput, "non-finite weight");
    detail::require(weights->minCoeff() >= 0.0, ErrorCode::InvalidInput, "negative weight");
    const double total = weights->sum();
    detail::require(total > 0.0, ErrorCode::InvalidInput, "weights sum to zero");
    return {std::move(v_rows), std::move(u_rows), *weights / total};
}

enum class Side { U, V };

/// Moments of (psi(U), V) or (U, psi(V)) for an affine psi.
inline JointMoments push_affine(const JointMoments& m, const AffineOperator& psi, Side side) {
    m.check_shapes();
    JointMoments out = m;
    const Matrix& a = psi.a;
    const Vector& b = psi.b;
    if (side == Side::U) {
        detail::require(psi.dim_in() == m.dim_u(), ErrorCode::DimensionMismatch,
                        "push_affine: psi does not act on U");
        out.mu_u = a * m.mu_u + b;
        out.c_u = a * m.c_u * a.transpose();
        out.c_uv = a * m.c_uv;
        if (!m.centered) {
            const Vector am = a * m.mu_u;
            out.c_u += am * b.transpose() + b * am.transpose() + b * b.transpose();
            out.c_uv += b * m.mu_v.transpose();
        }
    } else {
        detail::require(psi.dim_in() == m.dim_v(), ErrorCode::DimensionMismatch,
                        "push_affine: psi does not act on V");
        out.mu_v = a * m.mu_v + b;
        out.c_v = a * m.c_v * a.transpose();
        out.c_uv = m.c_uv * a.transpose();
        if (!m.centered) {
            const Vector am = a * m.mu_v;
            out.c_v += am * b.transpose() + b * am.transpose() + b * b.transpose();
            out.c_uv += m.mu_u * b.transpose();
        }
    }
    return out;
}

} // namespace lcelab
