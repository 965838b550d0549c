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
 * @file verification.hpp
 * @brief Independent oracles on finite laws: the exact conditional
 * expectation / covariance by atom grouping, and a weighted least-squares
 * fit that shares no code path with lce.hpp.
 */

#pragma once

#include <lcelab/moments.hpp>

#include <bit>
#include <cstdint>
#include <map>
#include <vector>

namespace lcelab {

/// Exact conditional quantity on a discrete law, one entry per distinct v.
struct ConditionalTable {
    struct Entry {
        Vector v;
        Matrix value; ///< vector values are stored as a single column
        double prob = 0.0;
    };

    std::vector<Entry> entries;             ///< in order of first appearance
    std::vector<std::size_t> group_of_atom; ///< entry index of every atom

    const Entry& at_atom(Eigen::Index j) const {
        return entries[group_of_atom[static_cast<std::size_t>(j)]];
    }
};

namespace detail {

/// Groups rows by exact bitwise equality. Returns the group index of every
/// row and the representative row of every group.
inline std::pair<std::vector<std::size_t>, std::vector<Eigen::Index>>
group_rows_exactly(const Matrix& rows) {
    std::map<std::vector<std::uint64_t>, std::size_t> index;
    std::vector<std::size_t> group(static_cast<std::size_t>(rows.rows()));
    std::vector<Eigen::Index> representative;
    std::vector<std::uint64_t> key(static_cast<std::size_t>(rows.cols()));
    for (Eigen::Index j = 0; j < rows.rows(); ++j) {
        for (Eigen::Index k = 0; k < rows.cols(); ++k)
            key[static_cast<std::size_t>(k)] = std::bit_cast<std::uint64_t>(rows(j, k));
        auto [it, inserted] = index.try_emplace(key, representative.size());
        if (inserted) representative.push_back(j);
        group[static_cast<std::size_t>(j)] = it->second;
    }
    return {std::move(group), std::move(representative)};
}

inline ConditionalTable conditional_table(const FiniteJointDistribution& dist, bool covariance) {
    auto [group, representative] = group_rows_exactly(dist.v());
    const std::size_t groups = representative.size();
    const Eigen::Index du = dist.dim_u();
    std::vector<double> prob(groups, 0.0);
    std::vector<Vector> mean(groups, Vector::Zero(du));
    std::vector<Eigen::Index> count(groups, 0);
    for (Eigen::Index j = 0; j < dist.size(); ++j) {
        const auto g = group[static_cast<std::size_t>(j)];
        prob[g] += dist.weights()(j);
        ++count[g];
    }
    // A group of zero probability gets equal weights; it is a null set anyway.
    auto weight = [&](Eigen::Index j) {
        const auto g = group[static_cast<std::size_t>(j)];
        return prob[g] > 0.0 ? dist.weights()(j) / prob[g] : 1.0 / static_cast<double>(count[g]);
    };
    for (Eigen::Index j = 0; j < dist.size(); ++j)
        mean[group[static_cast<std::size_t>(j)]] += weight(j) * dist.u_atom(j);

    ConditionalTable table;
    table.group_of_atom = group;
    table.entries.resize(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        table.entries[g].v = dist.v_atom(representative[g]);
        table.entries[g].prob = prob[g];
        table.entries[g].value = covariance ? Matrix(Matrix::Zero(du, du)) : Matrix(mean[g]);
    }
    if (covariance) {
        for (Eigen::Index j = 0; j < dist.size(); ++j) {
            const auto g = group[static_cast<std::size_t>(j)];
            const Vector d = dist.u_atom(j) - mean[g];
            table.entries[g].value += weight(j) * d * d.transpose();
        }
    }
    return table;
}

} // namespace detail

/// E[U | V = v] for every distinct v (exact grouping of atoms).
inline ConditionalTable exact_cef(const FiniteJointDistribution& dist) {
    return detail::conditional_table(dist, false);
}

/// Cov[U | V = v] for every distinct v.
inline ConditionalTable exact_ccov(const FiniteJointDistribution& dist) {
    return detail::conditional_table(dist, true);
}

/// E[U|V] evaluated at every atom (atoms x dim_u).
inline Matrix cef_at_atoms(const FiniteJointDistribution& dist) {
    const auto table = exact_cef(dist);
    Matrix out(dist.size(), dist.dim_u());
    for (Eigen::Index j = 0; j < dist.size(); ++j) out.row(j) = table.at_atom(j).value.col(0);
    return out;
}

/// E[Cov[U|V]].
inline Matrix expected_conditional_covariance(const FiniteJointDistribution& dist) {
    const auto table = exact_ccov(dist);
    Matrix out = Matrix::Zero(dist.dim_u(), dist.dim_u());
    for (const auto& e : table.entries) out += e.prob * e.value;
    return out;
}

/// Minimal-norm weighted affine least-squares fit of u on v: normal
/// equations of the design [1 | v] solved with the pseudo-inverse of the
/// design Gram matrix (complete orthogonal decomposition).
inline AffineOperator least_squares_oracle(const FiniteJointDistribution& dist) {
    const Eigen::Index n = dist.size();
    const Eigen::Index dv = dist.dim_v();
    Matrix design(n, dv + 1);
    design.col(0).setOnes();
    design.rightCols(dv) = dist.v();
    const Matrix weighted = dist.weights().asDiagonal() * design;
    const Matrix gram = design.transpose() * weighted;
    const Matrix rhs = weighted.transpose() * dist.u();

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    cod.setThreshold(1e-11);
    cod.compute(gram);
    const Matrix coef = cod.pseudoInverse() * rhs; // (dv + 1) x du

    AffineOperator out;
    out.b = coef.row(0).transpose();
    out.a = coef.bottomRows(dv).transpose();
    return out;
}

} // namespace lcelab
