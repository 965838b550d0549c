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
 * @file linalg.hpp
 * @brief Dense linear-algebra substrate: pseudo-inverses, PSD square roots,
 * sorted spectral decompositions, and the Douglas / Baker operator
 * factorizations used by the conditioning formulas.
 *
 * Every rank decision is relative: a singular value (or eigenvalue of a PSD
 * matrix) below `rank_rel * largest` is treated as exactly zero.
 */

#pragma once

#include <lcelab/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace lcelab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerical cutoffs. Both values must be strictly positive.
class Tolerance {
public:
    static constexpr double kDefaultRankRel = 1e-12;
    static constexpr double kDefaultResidualAbs = 1e-8;

    Tolerance() = default;
    Tolerance(double rank_rel, double residual_abs)
        : rank_rel_(rank_rel), residual_abs_(residual_abs) {
        detail::require(std::isfinite(rank_rel) && rank_rel > 0.0, ErrorCode::InvalidInput,
                        "tolerance rank_rel must be strictly positive");
        detail::require(std::isfinite(residual_abs) && residual_abs > 0.0,
                        ErrorCode::InvalidInput, "tolerance residual_abs must be strictly positive");
    }

    double rank_rel() const noexcept { return rank_rel_; }
    double residual_abs() const noexcept { return residual_abs_; }

private:
    double rank_rel_ = kDefaultRankRel;
    double residual_abs_ = kDefaultResidualAbs;
};

/// Eigenpairs of a symmetric PSD matrix, eigenvalues non-increasing.
///
/// Ordering rule (deterministic): eigenvalues are sorted in decreasing order;
/// every eigenvector is sign-normalised so that its first coordinate with
/// magnitude above 1e-10 is positive; eigenvalues closer than
/// `rank_rel * largest` count as tied, and within a tie group eigenvectors are
/// ordered lexicographically largest first (so e1 precedes e2 precedes e3).
struct SpectralDecomposition {
    Vector eigenvalues;
    Matrix eigenvectors; ///< column i belongs to eigenvalues(i)

    Eigen::Index size() const { return eigenvalues.size(); }

    /// Number of eigenvalues above `rank_rel * largest`.
    Eigen::Index numerical_rank(const Tolerance& tol) const {
        if (eigenvalues.size() == 0 || eigenvalues(0) <= 0.0) return 0;
        const double cutoff = tol.rank_rel() * eigenvalues(0);
        Eigen::Index r = 0;
        while (r < eigenvalues.size() && eigenvalues(r) > cutoff) ++r;
        return r;
    }

    Matrix reconstruct() const {
        return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
    }
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Largest singular value.
inline double operator_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cutoff.
inline Matrix pseudo_inverse(const Matrix& m, const Tolerance& tol = {}) {
    detail::require(all_finite(m), ErrorCode::InvalidInput, "pseudo_inverse: non-finite entries");
    if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = tol.rank_rel() * s(0);
    Vector s_inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff && s(i) > 0.0) s_inv(i) = 1.0 / s(i);
    return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose();
}

/// Number of singular values above `rank_rel * largest`.
inline Eigen::Index numerical_rank(const Matrix& m, const Tolerance& tol = {}) {
    if (m.size() == 0) return 0;
    Eigen::BDCSVD<Matrix> svd(m);
    const Vector& s = svd.singularValues();
    const double cutoff = tol.rank_rel() * s(0);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff && s(i) > 0.0) ++r;
    return r;
}

namespace detail {

/// (C + C^T)/2 after checking the asymmetry is at most residual_abs.
inline Matrix symmetrized(const Matrix& c, const Tolerance& tol, const char* who) {
    require(c.rows() == c.cols(), ErrorCode::DimensionMismatch,
            std::string(who) + ": matrix must be square");
    require(all_finite(c), ErrorCode::InvalidInput, std::string(who) + ": non-finite entries");
    if (c.size() == 0) return c;
    const double asym = (c - c.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol.residual_abs())
        throw Error(ErrorCode::NotPsd,
                    std::string(who) + ": asymmetry " + std::to_string(asym) +
                        " exceeds tolerance",
                    asym);
    return 0.5 * (c + c.transpose());
}

inline void normalise_sign(Eigen::Ref<Vector> v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-10) {
            if (v(i) < 0.0) v = -v;
            return;
        }
    }
}

inline bool lexicographically_greater(const Vector& a, const Vector& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) > b(i)) return true;
        if (a(i) < b(i)) return false;
    }
    return false;
}

} // namespace detail

/// Sorted eigendecomposition of a symmetric PSD matrix. Eigenvalues in
/// [-residual_abs, 0) are clamped to zero; anything more negative is an error.
inline SpectralDecomposition spectral_decomposition(const Matrix& c, const Tolerance& tol = {}) {
    const Matrix sym = detail::symmetrized(c, tol, "spectral_decomposition");
    const Eigen::Index n = sym.rows();
    SpectralDecomposition out;
    if (n == 0) {
        out.eigenvalues = Vector(0);
        out.eigenvectors = Matrix(0, 0);
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::InvalidInput, "spectral_decomposition: eigensolver failed");
    Vector values = solver.eigenvalues();
    Matrix vectors = solver.eigenvectors();

    const double min_value = values.minCoeff();
    if (min_value < -tol.residual_abs())
        throw Error(ErrorCode::NotPsd,
                    "spectral_decomposition: eigenvalue " + std::to_string(min_value) +
                        " below -residual_abs",
                    -min_value);
    values = values.cwiseMax(0.0);
    for (Eigen::Index j = 0; j < n; ++j) detail::normalise_sign(vectors.col(j));

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });

    // Values keep the strictly sorted order; only the vectors of a tie group
    // are reordered, which moves each value by at most the tie width.
    const std::vector<Eigen::Index> by_value = order;
    const double tie = tol.rank_rel() * values.maxCoeff();
    auto group_begin = order.begin();
    while (group_begin != order.end()) {
        auto group_end = group_begin + 1;
        while (group_end != order.end() && values(*group_begin) - values(*group_end) <= tie)
            ++group_end;
        std::stable_sort(group_begin, group_end, [&](Eigen::Index a, Eigen::Index b) {
            return detail::lexicographically_greater(vectors.col(a), vectors.col(b));
        });
        group_begin = group_end;
    }

    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto src = order[static_cast<std::size_t>(k)];
        out.eigenvalues(k) = values(by_value[static_cast<std::size_t>(k)]);
        out.eigenvectors.col(k) = vectors.col(src);
    }
    return out;
}

namespace detail {

/// H f(lambda) H^T over the numerically nonzero eigenvalues only.
template <class F>
Matrix spectral_function(const SpectralDecomposition& sd, const Tolerance& tol, F&& f) {
    const Eigen::Index rank = sd.numerical_rank(tol);
    const Eigen::Index n = sd.size();
    if (rank == 0) return Matrix::Zero(n, n);
    Vector d(rank);
    for (Eigen::Index i = 0; i < rank; ++i) d(i) = f(sd.eigenvalues(i));
    const auto h = sd.eigenvectors.leftCols(rank);
    const Matrix m = h * d.asDiagonal() * h.transpose();
    return 0.5 * (m + m.transpose());
}

} // namespace detail

/// Symmetric PSD square root. Eigenvalues below `rank_rel * largest` are
/// treated as zero, so S*S reproduces C up to that relative level.
inline Matrix psd_square_root(const Matrix& c, const Tolerance& tol = {}) {
    const auto sd = spectral_decomposition(c, tol);
    return detail::spectral_function(sd, tol, [](double l) { return std::sqrt(l); });
}

/// (C^{1/2})^dagger with the same eigenvalue cutoff as psd_square_root.
inline Matrix psd_pseudo_inverse_sqrt(const Matrix& c, const Tolerance& tol = {}) {
    const auto sd = spectral_decomposition(c, tol);
    return detail::spectral_function(sd, tol, [](double l) { return 1.0 / std::sqrt(l); });
}

/// Pseudo-inverse of a symmetric PSD matrix through its eigendecomposition.
inline Matrix psd_pseudo_inverse(const Matrix& c, const Tolerance& tol = {}) {
    const auto sd = spectral_decomposition(c, tol);
    return detail::spectral_function(sd, tol, [](double l) { return 1.0 / l; });
}

/// Orthogonal projector onto the numerical range of a symmetric PSD matrix.
inline Matrix range_projector(const Matrix& c, const Tolerance& tol = {}) {
    const auto sd = spectral_decomposition(c, tol);
    return detail::spectral_function(sd, tol, [](double) { return 1.0; });
}

/// Douglas factor Q = B^dagger A of a pair with ran A inside ran B, so that
/// A = B Q and ker Q = ker A. Range inclusion is verified through the
/// residual ||A - B Q||_F <= residual_abs * ||A||_F.
inline Matrix douglas_factor(const Matrix& a, const Matrix& b, const Tolerance& tol = {}) {
    detail::require(a.rows() == b.rows(), ErrorCode::DimensionMismatch,
                    "douglas_factor: A and B need the same number of rows");
    detail::require(all_finite(a), ErrorCode::InvalidInput, "douglas_factor: non-finite A");
    Matrix q = pseudo_inverse(b, tol) * a;
    const double residual = (a - b * q).norm();
    if (residual > tol.residual_abs() * a.norm())
        throw Error(ErrorCode::IncompatibleRanges,
                    "douglas_factor: ran A is not contained in ran B (residual " +
                        std::to_string(residual) + ")",
                    residual);
    return q;
}

/// Correlation operator R_VU = (C_V^{1/2})^dagger C_VU (C_U^{1/2})^dagger of a
/// joint covariance, with C_VU of shape dim_v x dim_u. Throws
/// InconsistentMoments when C_V^{1/2} R C_U^{1/2} does not give back C_VU or
/// when ||R|| exceeds 1, i.e. when no joint law has these moments.
inline Matrix baker_correlation(const Matrix& c_u, const Matrix& c_v, const Matrix& c_vu,
                                const Tolerance& tol = {}) {
    detail::require(c_vu.rows() == c_v.rows() && c_vu.cols() == c_u.rows(),
                    ErrorCode::DimensionMismatch,
                    "baker_correlation: C_VU must be dim_v x dim_u");
    const auto sd_u = spectral_decomposition(c_u, tol);
    const auto sd_v = spectral_decomposition(c_v, tol);
    const auto sqrt_fn = [](double l) { return std::sqrt(l); };
    const auto inv_sqrt_fn = [](double l) { return 1.0 / std::sqrt(l); };
    const Matrix sqrt_u = detail::spectral_function(sd_u, tol, sqrt_fn);
    const Matrix sqrt_v = detail::spectral_function(sd_v, tol, sqrt_fn);
    const Matrix r = detail::spectral_function(sd_v, tol, inv_sqrt_fn) * c_vu *
                     detail::spectral_function(sd_u, tol, inv_sqrt_fn);

    const double scale = std::max(1.0, c_vu.norm());
    const double residual = (sqrt_v * r * sqrt_u - c_vu).norm();
    if (residual > tol.residual_abs() * scale)
        throw Error(ErrorCode::InconsistentMoments,
                    "baker_correlation: C_VU is not of the form C_V^{1/2} R C_U^{1/2}", residual);
    const double norm = operator_norm(r);
    if (norm > 1.0 + tol.residual_abs())
        throw Error(ErrorCode::InconsistentMoments,
                    "baker_correlation: correlation operator norm " + std::to_string(norm) +
                        " exceeds 1",
                    norm - 1.0);
    return r;
}

/// Hilbert-Schmidt inner product trace(M1^T M2).
inline double trace_product(const Matrix& m1, const Matrix& m2) {
    detail::require(m1.rows() == m2.rows() && m1.cols() == m2.cols(),
                    ErrorCode::DimensionMismatch, "trace_product: shapes differ");
    return (m1.transpose() * m2).trace();
}

} // namespace lcelab
