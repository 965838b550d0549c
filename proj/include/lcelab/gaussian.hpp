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
 * @file gaussian.hpp
 * @brief Conditioning of jointly Gaussian vectors, Karhunen-Loeve truncation
 * and seeded sampling.
 *
 * For a Gaussian (U, V) the conditional law of U given V = v is Gaussian with
 * mean equal to the LCE at v and a covariance that does not depend on v. The
 * covariance is available through three formulas:
 *
 *     invertible    C_U - C_UV C_V^{-1} C_VU        (C_V must be invertible)
 *     compatible    C_U - C_UV C_V^dagger C_VU
 *     incompatible  C_U - M_VU^T M_VU,  M_VU = (C_V^{1/2})^dagger C_VU
 *
 * All three agree whenever C_V is invertible.
 */

#pragma once

#include <lcelab/lce.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

namespace lcelab {

/// Seed used by sample() callers that do not supply one.
inline constexpr std::uint64_t kDefaultSeed = 20260101;

struct GaussianMeasure {
    Vector mean;
    Matrix cov;

    Eigen::Index dim() const noexcept { return mean.size(); }

    /// Checks shapes and that cov is symmetric PSD within tolerance.
    void validate(const Tolerance& tol = {}) const {
        detail::require(cov.rows() == mean.size() && cov.cols() == mean.size(),
                        ErrorCode::DimensionMismatch, "gaussian: mean and covariance shapes differ");
        detail::require(mean.allFinite(), ErrorCode::InvalidInput, "gaussian: non-finite mean");
        (void)spectral_decomposition(cov, tol);
    }
};

enum class GaussianRegime { Invertible, Compatible, Incompatible };

inline std::string to_string(GaussianRegime r) {
    switch (r) {
    case GaussianRegime::Invertible: return "invertible";
    case GaussianRegime::Compatible: return "compatible";
    case GaussianRegime::Incompatible: return "incompatible";
    }
    return "unknown";
}

inline GaussianRegime parse_gaussian_regime(const std::string& name) {
    if (name == "invertible") return GaussianRegime::Invertible;
    if (name == "compatible") return GaussianRegime::Compatible;
    if (name == "incompatible") return GaussianRegime::Incompatible;
    throw Error(ErrorCode::InvalidInput, "unknown gaussian regime '" + name + "'");
}

struct ConditionalGaussian {
    AffineOperator mean_map; ///< v -> E[U | V = v]
    Matrix cond_cov;         ///< Cov[U | V], the same for every v
    GaussianRegime regime = GaussianRegime::Compatible;
};

/// Block moments of (U, V) for a joint measure whose first `dim_u`
/// coordinates are U.
inline JointMoments gaussian_blocks(const GaussianMeasure& joint, Eigen::Index dim_u) {
    const Eigen::Index d = joint.dim();
    detail::require(dim_u >= 1 && dim_u < d, ErrorCode::OutOfRange,
                    "gaussian: dim_u must lie in [1, dim - 1]");
    const Eigen::Index dv = d - dim_u;
    JointMoments m;
    m.mu_u = joint.mean.head(dim_u);
    m.mu_v = joint.mean.tail(dv);
    m.c_u = joint.cov.topLeftCorner(dim_u, dim_u);
    m.c_v = joint.cov.bottomRightCorner(dv, dv);
    m.c_uv = joint.cov.topRightCorner(dim_u, dv);
    return m;
}

inline ConditionalGaussian gaussian_condition(const GaussianMeasure& joint, Eigen::Index dim_u,
                                              GaussianRegime regime, const Tolerance& tol = {}) {
    joint.validate(tol);
    const JointMoments m = gaussian_blocks(joint, dim_u);
    ConditionalGaussian out;
    out.regime = regime;
    switch (regime) {
    case GaussianRegime::Invertible: {
        const auto sd = spectral_decomposition(m.c_v, tol);
        detail::require(sd.numerical_rank(tol) == m.dim_v(), ErrorCode::SingularCovariance,
                        "gaussian_condition: C_V is singular; use the compatible regime");
        Eigen::LLT<Matrix> llt(m.c_v);
        detail::require(llt.info() == Eigen::Success, ErrorCode::SingularCovariance,
                        "gaussian_condition: C_V is not positive definite");
        const Matrix solved = llt.solve(m.c_vu()); // C_V^{-1} C_VU
        out.mean_map = {solved.transpose(), m.mu_u - solved.transpose() * m.mu_v};
        out.cond_cov = m.c_u - m.c_uv * solved;
        break;
    }
    case GaussianRegime::Compatible: {
        out.mean_map = lce_compatible(m, tol).gamma;
        out.cond_cov = m.c_u - m.c_uv * psd_pseudo_inverse(m.c_v, tol) * m.c_vu();
        break;
    }
    case GaussianRegime::Incompatible: {
        out.mean_map = lce_truncated(m, m.dim_v(), tol).gamma;
        const Matrix m_vu = psd_pseudo_inverse_sqrt(m.c_v, tol) * m.c_vu();
        out.cond_cov = m.c_u - m_vu.transpose() * m_vu;
        break;
    }
    }
    out.cond_cov = 0.5 * (out.cond_cov + out.cond_cov.transpose()).eval();
    return out;
}

/// Keeps the leading n Karhunen-Loeve terms: the covariance is replaced by
/// its projection onto the top-n eigenspace, the mean is unchanged.
inline GaussianMeasure kl_truncate(const GaussianMeasure& g, Eigen::Index n,
                                   const Tolerance& tol = {}) {
    detail::require(n >= 1 && n <= g.dim(), ErrorCode::OutOfRange,
                    "kl_truncate: n must lie in [1, dim]");
    const auto sd = spectral_decomposition(g.cov, tol);
    const auto h = sd.eigenvectors.leftCols(n);
    Matrix cov = h * sd.eigenvalues.head(n).asDiagonal() * h.transpose();
    return {g.mean, 0.5 * (cov + cov.transpose())};
}

namespace detail {

/// Standard normals from std::mt19937_64 (fully specified by the standard)
/// through the Box-Muller transform, so streams match across platforms.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace detail

/// `count` draws (one per row) of mean + C^{1/2} z with z standard normal.
inline Matrix sample(const GaussianMeasure& g, Eigen::Index count, std::uint64_t seed,
                     const Tolerance& tol = {}) {
    detail::require(count >= 1, ErrorCode::InvalidInput, "sample: count must be >= 1");
    g.validate(tol);
    const Matrix root = psd_square_root(g.cov, tol);
    detail::NormalStream normals(seed);
    Matrix z(count, g.dim());
    for (Eigen::Index i = 0; i < count; ++i)
        for (Eigen::Index j = 0; j < g.dim(); ++j) z(i, j) = normals.next();
    Matrix out = z * root; // root is symmetric
    out.rowwise() += g.mean.transpose();
    return out;
}

} // namespace lcelab
