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
 * @file lce.hpp
 * @brief Linear (affine) conditional expectation of U given V, its residual,
 * the average linear conditional covariance and the linear conditional
 * covariance field.
 *
 * The LCE is the best L2 approximation of U by an affine function of V:
 *
 *     gamma(v) = mu_U + (C_V^dagger C_VU)^* (v - mu_V)
 *
 * All spaces are real coordinate spaces, so the adjoint (C_V^dagger C_VU)^*
 * is the transpose C_UV C_V^dagger and that is what is computed.
 *
 * Three regimes are available:
 *  - compatible: pseudo-inverse formula, valid when ran C_VU lies in ran C_V
 *    (always true in exact finite-dimensional arithmetic; checked numerically);
 *  - truncated(n): C_V and C_VU projected onto the leading n eigenvectors of
 *    C_V before applying the compatible formula;
 *  - regularized(eps): C_UV (C_V + eps I)^{-1}, the minimiser of the
 *    functional plus eps times the squared Hilbert-Schmidt norm of the slope.
 */

#pragma once

#include <lcelab/linalg.hpp>
#include <lcelab/moments.hpp>

#include <optional>
#include <string>
#include <vector>

namespace lcelab {

struct Regime {
    enum class Kind { Compatible, Truncated, Regularized };

    Kind kind = Kind::Compatible;
    Eigen::Index rank = 0; ///< truncation level n (Truncated only)
    double eps = 0.0;      ///< Tikhonov parameter (Regularized only)

    static Regime compatible() { return {}; }
    static Regime truncated(Eigen::Index n) { return {Kind::Truncated, n, 0.0}; }
    static Regime regularized(double eps) { return {Kind::Regularized, 0, eps}; }

    std::string name() const {
        switch (kind) {
        case Kind::Compatible: return "compatible";
        case Kind::Truncated: return "truncated";
        case Kind::Regularized: return "regularized";
        }
        return "unknown";
    }

    friend bool operator==(const Regime&, const Regime&) = default;
};

struct LceResult {
    AffineOperator gamma;
    Regime regime;
    double compat_residual = 0.0; ///< relative ||(I - P_ran C_V) C_VU|| of the input moments
    Eigen::Index rank_used = 0;   ///< eigen-directions of C_V actually inverted
};

struct CompatibilityReport {
    bool compatible = true;
    double residual = 0.0;
};

namespace detail {

inline void require_centered(const JointMoments& m, const char* who) {
    m.check_shapes();
    require(m.centered, ErrorCode::InvalidInput,
            std::string(who) + ": centred moments are required");
}

inline AffineOperator affine_from_slope(const JointMoments& m, Matrix slope) {
    Vector b = m.mu_u - slope * m.mu_v;
    return {std::move(slope), std::move(b)};
}

} // namespace detail

/// Range-inclusion test ran C_VU within ran C_V. The residual is
/// ||C_VU - P C_VU||_F / max(||C_VU||_F, 1) with P the projector onto ran C_V.
inline CompatibilityReport compatibility_check(const JointMoments& m, const Tolerance& tol = {}) {
    m.check_shapes();
    const Matrix c_vu = m.c_vu();
    const Matrix p = range_projector(m.c_v, tol);
    const double residual = (c_vu - p * c_vu).norm() / std::max(c_vu.norm(), 1.0);
    return {residual <= tol.residual_abs(), residual};
}

/// LCE in the compatible case. Throws IncompatibleCase (carrying the
/// residual) when the range inclusion fails; use lce_truncated or
/// lce_regularized for such moments.
inline LceResult lce_compatible(const JointMoments& m, const Tolerance& tol = {}) {
    detail::require_centered(m, "lce_compatible");
    const auto report = compatibility_check(m, tol);
    if (!report.compatible)
        throw Error(ErrorCode::IncompatibleCase,
                    "lce_compatible: ran C_VU is not contained in ran C_V (relative residual " +
                        std::to_string(report.residual) + "); use lce_truncated",
                    report.residual);
    const auto sd = spectral_decomposition(m.c_v, tol);
    const Matrix c_v_pinv =
        detail::spectral_function(sd, tol, [](double l) { return 1.0 / l; });
    LceResult out{detail::affine_from_slope(m, m.c_uv * c_v_pinv), Regime::compatible(),
                  report.residual, sd.numerical_rank(tol)};
    return out;
}

/// LCE of U given the projection of V onto the leading n eigenvectors of C_V.
/// Eigen-directions beyond the numerical rank are never included, so the
/// effective level is min(n, rank C_V).
inline LceResult lce_truncated(const JointMoments& m, Eigen::Index n, const Tolerance& tol = {}) {
    detail::require_centered(m, "lce_truncated");
    if (n < 1 || n > m.dim_v())
        throw Error(ErrorCode::OutOfRange, "lce_truncated: n must lie in [1, dim_v], got " +
                                               std::to_string(n));
    const auto sd = spectral_decomposition(m.c_v, tol);
    const Eigen::Index k = std::min<Eigen::Index>(n, sd.numerical_rank(tol));
    const Matrix h = sd.eigenvectors.leftCols(k);
    const Matrix p = h * h.transpose();
    const Matrix c_v_n = p * m.c_v * p;
    const Matrix c_uv_n = m.c_uv * p;
    const Matrix slope = c_uv_n * psd_pseudo_inverse(c_v_n, tol);
    return {detail::affine_from_slope(m, slope), Regime::truncated(n),
            compatibility_check(m, tol).residual, k};
}

/// Tikhonov-regularised LCE, slope C_UV (C_V + eps I)^{-1}.
inline LceResult lce_regularized(const JointMoments& m, double eps, const Tolerance& tol = {}) {
    detail::require_centered(m, "lce_regularized");
    detail::require(std::isfinite(eps) && eps > 0.0, ErrorCode::InvalidInput,
                    "lce_regularized: eps must be > 0");
    const Matrix shifted = m.c_v + eps * Matrix::Identity(m.dim_v(), m.dim_v());
    Eigen::LDLT<Matrix> ldlt(shifted);
    detail::require(ldlt.info() == Eigen::Success, ErrorCode::SingularCovariance,
                    "lce_regularized: C_V + eps I could not be factorised");
    const Matrix slope = ldlt.solve(m.c_vu()).transpose();
    return {detail::affine_from_slope(m, slope), Regime::regularized(eps),
            compatibility_check(m, tol).residual, numerical_rank(m.c_v, tol)};
}

inline LceResult fit_lce(const JointMoments& m, const Regime& regime, const Tolerance& tol = {}) {
    switch (regime.kind) {
    case Regime::Kind::Compatible: return lce_compatible(m, tol);
    case Regime::Kind::Truncated: return lce_truncated(m, regime.rank, tol);
    case Regime::Kind::Regularized: return lce_regularized(m, regime.eps, tol);
    }
    throw Error(ErrorCode::InvalidInput, "unknown regime");
}

/// E_{U|V}(gamma) = E ||U - gamma(V)||^2 under the law.
inline double functional_value(const FiniteJointDistribution& dist, const AffineOperator& gamma) {
    const Matrix r = dist.u() - gamma.apply_rows(dist.v());
    return dist.weights().dot(r.rowwise().squaredNorm());
}

/// The same functional evaluated from centred moments alone.
inline double functional_value(const JointMoments& m, const AffineOperator& gamma) {
    detail::require_centered(m, "functional_value");
    const Matrix& a = gamma.a;
    const Vector bias = m.mu_u - gamma(m.mu_v);
    return m.c_u.trace() - 2.0 * trace_product(a.transpose(), m.c_vu()) +
           trace_product(a, a * m.c_v) + bias.squaredNorm();
}

/// E_{U|V}(gamma) + eps ||A||_HS^2.
inline double regularized_functional(const FiniteJointDistribution& dist,
                                     const AffineOperator& gamma, double eps) {
    return functional_value(dist, gamma) + eps * gamma.a.squaredNorm();
}

/// Atoms (v_j, u_j - gamma(v_j)) with the original weights.
inline FiniteJointDistribution residual_distribution(const FiniteJointDistribution& dist,
                                                     const AffineOperator& gamma) {
    detail::require(gamma.dim_in() == dist.dim_v() && gamma.dim_out() == dist.dim_u(),
                    ErrorCode::DimensionMismatch, "residual_distribution: shape mismatch");
    return {dist.v(), dist.u() - gamma.apply_rows(dist.v()), dist.weights()};
}

/// Moments of (U, V) together with a third block W sharing the same V.
struct TripleMoments {
    JointMoments uv;
    Vector mu_w;
    Matrix c_w;
    Matrix c_uw; ///< dim_u x dim_w
    Matrix c_vw; ///< dim_v x dim_w

    /// W = U.
    static TripleMoments with_w_equal_u(const JointMoments& m) {
        return {m, m.mu_u, m.c_u, m.c_u, m.c_vu()};
    }

    void check_shapes() const {
        uv.check_shapes();
        const auto dw = mu_w.size();
        detail::require(c_w.rows() == dw && c_w.cols() == dw && c_uw.rows() == uv.dim_u() &&
                            c_uw.cols() == dw && c_vw.rows() == uv.dim_v() && c_vw.cols() == dw,
                        ErrorCode::DimensionMismatch, "triple moments: inconsistent shapes");
    }
};

/// Centred moments of (U, V, W) for a law and a W block (atoms x dim_w).
inline TripleMoments triple_moments(const FiniteJointDistribution& dist, const Matrix& w_rows) {
    detail::require(w_rows.rows() == dist.size(), ErrorCode::DimensionMismatch,
                    "triple_moments: W block needs one row per atom");
    const Vector& w = dist.weights();
    TripleMoments tm;
    tm.uv = empirical_moments(dist, true);
    tm.mu_w = w_rows.transpose() * w;
    Matrix wc = w_rows;
    wc.rowwise() -= tm.mu_w.transpose();
    Matrix uc = dist.u();
    uc.rowwise() -= tm.uv.mu_u.transpose();
    Matrix vc = dist.v();
    vc.rowwise() -= tm.uv.mu_v.transpose();
    const Matrix ww = w.asDiagonal() * wc;
    tm.c_w = wc.transpose() * ww;
    tm.c_w = 0.5 * (tm.c_w + tm.c_w.transpose()).eval();
    tm.c_uw = uc.transpose() * ww;
    tm.c_vw = vc.transpose() * ww;
    return tm;
}

/// Average linear conditional covariance C_UW - M_VU^T M_VW with
/// M_VX = (C_V^{1/2})^dagger C_VX. For W = U this is the adjusted
/// (Bayes linear) covariance and is PSD.
inline Matrix alcc(const TripleMoments& tm, const Tolerance& tol = {}) {
    tm.check_shapes();
    detail::require(tm.uv.centered, ErrorCode::InvalidInput, "alcc: centred moments required");
    const Matrix root_pinv = psd_pseudo_inverse_sqrt(tm.uv.c_v, tol);
    const Matrix m_vu = root_pinv * tm.uv.c_vu();
    const Matrix m_vw = root_pinv * tm.c_vw;
    return tm.c_uw - m_vu.transpose() * m_vw;
}

/// v -> Cov^A[U, W | V = v], an affine map into dim_u x dim_w matrices:
///
///     field(v) = base + sum_k slope(., ., k) (v - center)_k
///
/// `base` is the mean of the field (the ALCC) and `center` is mu_V.
/// The slope is stored flattened: row i * dim_w + j, column k.
struct AffineOperatorField {
    Matrix base;
    Vector center;
    Matrix slope_flat;

    Eigen::Index dim_u() const noexcept { return base.rows(); }
    Eigen::Index dim_w() const noexcept { return base.cols(); }
    Eigen::Index dim_v() const noexcept { return center.size(); }

    double slope(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
        return slope_flat(i * dim_w() + j, k);
    }

    Matrix operator()(const Vector& v) const {
        detail::require(v.size() == dim_v(), ErrorCode::DimensionMismatch,
                        "operator field: input dimension mismatch");
        const Vector flat = slope_flat * (v - center);
        Matrix out = base;
        for (Eigen::Index i = 0; i < dim_u(); ++i)
            for (Eigen::Index j = 0; j < dim_w(); ++j) out(i, j) += flat(i * dim_w() + j);
        return out;
    }
};

/// Linear conditional covariance: the LCE given V of
/// Z = R^A[U|V] (x) R^A[W|V], formed atom by atom (row-major over
/// (u-index, w-index)). Needs the full law, not just moments. W defaults to U.
/// Only the compatible and regularized regimes are accepted.
inline AffineOperatorField lcc(const FiniteJointDistribution& dist,
                               const std::optional<Matrix>& w_rows = std::nullopt,
                               const Regime& regime = Regime::compatible(),
                               const Tolerance& tol = {}) {
    detail::require(regime.kind != Regime::Kind::Truncated, ErrorCode::InvalidInput,
                    "lcc: regime must be compatible or regularized");
    const Matrix& w_block = w_rows ? *w_rows : dist.u();
    detail::require(w_block.rows() == dist.size(), ErrorCode::DimensionMismatch,
                    "lcc: W block needs one row per atom");

    const auto gamma_u = fit_lce(empirical_moments(dist), regime, tol).gamma;
    const Matrix r_u = dist.u() - gamma_u.apply_rows(dist.v());
    Matrix r_w = r_u;
    if (w_rows) {
        const FiniteJointDistribution dist_w(dist.v(), w_block, dist.weights());
        const auto gamma_w = fit_lce(empirical_moments(dist_w), regime, tol).gamma;
        r_w = w_block - gamma_w.apply_rows(dist.v());
    }

    const Eigen::Index du = r_u.cols();
    const Eigen::Index dw = r_w.cols();
    Matrix z(dist.size(), du * dw);
    for (Eigen::Index a = 0; a < dist.size(); ++a)
        for (Eigen::Index i = 0; i < du; ++i)
            for (Eigen::Index j = 0; j < dw; ++j) z(a, i * dw + j) = r_u(a, i) * r_w(a, j);

    const FiniteJointDistribution dist_z(dist.v(), z, dist.weights());
    const JointMoments m_z = empirical_moments(dist_z);
    const auto gamma_z = fit_lce(m_z, regime, tol).gamma;

    AffineOperatorField field;
    field.base = Matrix(du, dw);
    for (Eigen::Index i = 0; i < du; ++i)
        for (Eigen::Index j = 0; j < dw; ++j) field.base(i, j) = m_z.mu_u(i * dw + j);
    field.center = m_z.mu_v;
    field.slope_flat = gamma_z.a;
    return field;
}

} // namespace lcelab
