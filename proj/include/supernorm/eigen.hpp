#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "supernorm/common.hpp"
#include "supernorm/matrix.hpp"

namespace supernorm {

// Configuration for the subgraph-specific factor. p is the base of the
// polynomial rolling hash; eigenvalues are snapped to the eig_quantum grid
// before hashing so solver jitter cannot change a factor across platforms.
struct FactorConfig {
    double p = 0.05;
    double eig_quantum = 1e-6;
    double eig_tolerance = 1e-10;
    int max_sweeps = 100;

    void validate() const {
        if (!(p > 0.0 && p < 1.0)) throw DataError("FactorConfig: p must lie in (0,1)");
        if (!(eig_quantum > 0.0)) throw DataError("FactorConfig: eig_quantum must be positive");
        if (!(eig_tolerance > 0.0)) throw DataError("FactorConfig: eig_tolerance must be positive");
        if (max_sweeps < 1) throw DataError("FactorConfig: max_sweeps must be >= 1");
    }
};

namespace detail {

inline double offdiag_norm(const Matrix& a) {
    double s = 0.0;
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace detail

// All eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi
// rotations. Converges when the off-diagonal Frobenius norm drops below
// cfg.eig_tolerance; errors out after cfg.max_sweeps sweeps.
inline std::vector<double> symmetric_eigenvalues(const Matrix& a, const FactorConfig& cfg = FactorConfig{}) {
    cfg.validate();
    if (a.rows != a.cols) throw DataError("symmetric_eigenvalues: matrix is not square (" + a.shape_str() + ")");
    const int n = a.rows;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(a(i, j) - a(j, i)) > 1e-9)
                throw DataError("symmetric_eigenvalues: matrix is not symmetric at (" +
                                std::to_string(i) + "," + std::to_string(j) + ")");
    if (n == 0) return {};
    if (n == 1) return {a(0, 0)};

    Matrix m = a;
    // symmetrize exactly so rotations preserve symmetry bit-for-bit
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double v = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = v;
            m(j, i) = v;
        }

    int sweep = 0;
    while (detail::offdiag_norm(m) >= cfg.eig_tolerance) {
        if (sweep++ >= cfg.max_sweeps)
            throw NumericError("symmetric_eigenvalues: no convergence after " +
                               std::to_string(cfg.max_sweeps) + " sweeps");
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = m(p, q);
                if (apq == 0.0) continue;
                double app = m(p, p);
                double aqq = m(q, q);
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double mkp = m(k, p);
                    double mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    double mpk = m(p, k);
                    double mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
            }
        }
    }

    std::vector<double> eigs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) eigs[static_cast<std::size_t>(i)] = m(i, i);
    std::sort(eigs.begin(), eigs.end());
    return eigs;
}

}  // namespace supernorm
