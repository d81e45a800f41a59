#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "pcdrift/matrix.hpp"

namespace pcdrift {

/// Symmetric Pearson correlation matrix with unit diagonal.
///
/// The constructor does not validate; `is_valid_correlation` checks the
/// invariants at a given tolerance.
class CorrelationMatrix {
public:
    CorrelationMatrix() = default;
    explicit CorrelationMatrix(Matrix entries) : entries_(std::move(entries)) {}

    static CorrelationMatrix identity(std::size_t n) { return CorrelationMatrix(Matrix::identity(n)); }

    /// Equal off-diagonal correlation `rho` everywhere.
    static CorrelationMatrix compound_symmetric(std::size_t n, double rho) {
        Matrix m(n, n, rho);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return CorrelationMatrix(std::move(m));
    }

    [[nodiscard]] std::size_t dim() const noexcept { return entries_.rows(); }
    double operator()(std::size_t i, std::size_t j) const noexcept { return entries_(i, j); }
    [[nodiscard]] const Matrix& matrix() const noexcept { return entries_; }

    friend bool operator==(const CorrelationMatrix&, const CorrelationMatrix&) = default;

private:
    Matrix entries_;
};

inline bool is_valid_correlation(const CorrelationMatrix& r, double tol = 1e-12) {
    const std::size_t n = r.dim();
    if (r.matrix().cols() != n) return false;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(r(i, i) - 1.0) > tol) return false;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = r(i, j);
            if (!std::isfinite(v) || std::abs(v) > 1.0 + tol) return false;
            if (std::abs(v - r(j, i)) > tol) return false;
        }
    }
    return true;
}

}  // namespace pcdrift
