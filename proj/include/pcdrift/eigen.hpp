#pragma once

/**
 * @file eigen.hpp
 * @brief Cyclic Jacobi eigendecomposition for correlation matrices.
 *
 * Eigenvalues come out in descending order with unit-norm eigenvectors as
 * matrix columns. Every rotation is applied in a fixed (p, q) order, so the
 * result is a pure function of the input bits.
 *
 * Sign convention: each eigenvector is flipped so that its entry of largest
 * magnitude is positive (ties on magnitude go to the lowest index). Equal
 * eigenvalues keep the order in which their diagonal entries ended up after
 * the last sweep.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <vector>

#include "pcdrift/correlation_matrix.hpp"
#include "pcdrift/error.hpp"
#include "pcdrift/matrix.hpp"

namespace pcdrift {

struct EigenDecomposition {
    std::vector<double> values;  ///< descending
    Matrix vectors;              ///< column j is the eigenvector of values[j]

    [[nodiscard]] std::size_t dim() const noexcept { return values.size(); }
    [[nodiscard]] std::vector<double> vector(std::size_t j) const { return vectors.column(j); }
};

struct JacobiOptions {
    int max_sweeps = 30;
    /// Converged once the off-diagonal Frobenius norm drops below this times N.
    double tolerance_factor = 1e-12;
    /// Eigenvalues in [-clamp_floor, 0) are set to exactly zero.
    double clamp_floor = 1e-10;
};

namespace detail {

inline double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
}

/// Annihilates a(p, q) with one plane rotation. `basis` holds eigenvector
/// estimates as rows and receives the same rotation.
inline void jacobi_rotate(Matrix& a, Matrix& basis, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    const double app = a(p, p);
    const double aqq = a(q, q);
    const double theta = (aqq - app) / (2.0 * apq);
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;

    const std::size_t n = a.rows();
    double* rp = a.data() + p * n;
    double* rq = a.data() + q * n;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = rp[k];
        const double y = rq[k];
        rp[k] = c * x - s * y;
        rq[k] = s * x + c * y;
    }
    for (std::size_t k = 0; k < n; ++k) {
        a(k, p) = rp[k];
        a(k, q) = rq[k];
    }
    a(p, p) = app - t * apq;
    a(q, q) = aqq + t * apq;
    a(p, q) = 0.0;
    a(q, p) = 0.0;

    double* bp = basis.data() + p * n;
    double* bq = basis.data() + q * n;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = bp[k];
        const double y = bq[k];
        bp[k] = c * x - s * y;
        bq[k] = s * x + c * y;
    }
}

/// Runs cyclic sweeps on `a` in place until the off-diagonal norm is below
/// tolerance. On return the diagonal of `a` holds the eigenvalues and the
/// rows of `basis` the eigenvectors.
inline void jacobi_diagonalize(Matrix& a, Matrix& basis, const JacobiOptions& opts) {
    const std::size_t n = a.rows();
    const double tol = opts.tolerance_factor * static_cast<double>(n);
    // Entries this small cannot move the off-diagonal norm past tolerance.
    const double skip = tol / (10.0 * static_cast<double>(std::max<std::size_t>(n, 1)));

    double off = off_diagonal_norm(a);
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        if (off < tol) return;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                if (std::abs(a(p, q)) > skip) jacobi_rotate(a, basis, p, q);
        off = off_diagonal_norm(a);
    }
    if (off < tol) return;
    std::ostringstream msg;
    msg << "Jacobi eigensolver did not converge in " << opts.max_sweeps
        << " sweeps; off-diagonal norm " << off;
    throw ConvergenceError(msg.str(), off);
}

}  // namespace detail

/// Flips each column so its largest-magnitude entry is positive.
inline void canonicalize_signs(EigenDecomposition& d) {
    const std::size_t n = d.vectors.rows();
    for (std::size_t j = 0; j < d.vectors.cols(); ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double m = std::abs(d.vectors(i, j));
            if (m > best) {
                best = m;
                arg = i;
            }
        }
        if (n > 0 && d.vectors(arg, j) < 0.0)
            for (std::size_t i = 0; i < n; ++i) d.vectors(i, j) = -d.vectors(i, j);
    }
}

namespace detail {

inline EigenDecomposition assemble(const Matrix& a, const Matrix& basis, const JacobiOptions& opts) {
    const std::size_t n = a.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    EigenDecomposition d;
    d.values.resize(n);
    d.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double v = a(order[j], order[j]);
        if (v < 0.0 && v >= -opts.clamp_floor) v = 0.0;
        d.values[j] = v;
        const auto src = basis.row(order[j]);
        for (std::size_t i = 0; i < n; ++i) d.vectors(i, j) = src[i];
    }
    canonicalize_signs(d);
    return d;
}

}  // namespace detail

/// Full eigendecomposition of a symmetric matrix.
inline EigenDecomposition decompose_symmetric(const Matrix& symmetric, const JacobiOptions& opts = {}) {
    Matrix a = symmetric;
    Matrix basis = Matrix::identity(symmetric.rows());
    detail::jacobi_diagonalize(a, basis, opts);
    return detail::assemble(a, basis, opts);
}

inline EigenDecomposition decompose(const CorrelationMatrix& r, const JacobiOptions& opts = {}) {
    return decompose_symmetric(r.matrix(), opts);
}

/// Sum of l_j v_j v_j^T.
inline CorrelationMatrix reconstruct(const EigenDecomposition& d) {
    const std::size_t n = d.dim();
    Matrix m(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const double l = d.values[j];
        for (std::size_t r = 0; r < n; ++r) {
            const double lv = l * d.vectors(r, j);
            for (std::size_t c = 0; c < n; ++c) m(r, c) += lv * d.vectors(c, j);
        }
    }
    return CorrelationMatrix(std::move(m));
}

}  // namespace pcdrift
