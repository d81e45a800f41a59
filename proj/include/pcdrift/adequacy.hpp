#pragma once

/**
 * @file adequacy.hpp
 * @brief Kaiser-Meyer-Olkin sampling adequacy and the minimal-window search.
 *
 *   KMO = sum r_jk^2 / (sum r_jk^2 + sum q_jk^2),   j != k
 *
 * r_jk are the correlations and q_jk the partial correlations, taken from the
 * inverse correlation matrix C = R^-1 as q_jk = -c_jk / sqrt(c_jj c_kk).
 * A matrix whose smallest eigenvalue is at most 1e-10 has no usable inverse;
 * KMO is then reported as not estimable.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pcdrift/correlation_matrix.hpp"
#include "pcdrift/eigen.hpp"
#include "pcdrift/error.hpp"
#include "pcdrift/ingest.hpp"
#include "pcdrift/matrix.hpp"
#include "pcdrift/rolling_stats.hpp"

namespace pcdrift {

/// Smallest eigenvalue at or below which R counts as singular.
inline constexpr double singular_eigenvalue_floor = 1e-10;

struct KmoReport {
    double kmo = 0.0;
    double r_sq_sum = 0.0;  ///< over ordered off-diagonal pairs
    double q_sq_sum = 0.0;
};

namespace detail {

/// Inverse of a symmetric positive definite matrix through its Cholesky
/// factor. Throws NotEstimableError when the smallest eigenvalue is at most
/// `singular_eigenvalue_floor`.
inline Matrix spd_inverse(const Matrix& r) {
    const std::size_t n = r.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = r(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        // A Cholesky pivot never falls below the smallest eigenvalue.
        if (!(d > singular_eigenvalue_floor))
            throw NotEstimableError("correlation matrix is singular (Cholesky pivot " + std::to_string(d) +
                                    " at variable " + std::to_string(j) + ")");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = r(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }

    // Lower-triangular inverse by forward substitution.
    Matrix li(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        li(j, j) = 1.0 / l(j, j);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = j; k < i; ++k) s -= l(i, k) * li(k, j);
            li(i, j) = s / l(i, i);
        }
    }

    // C = L^-T L^-1
    Matrix c(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = j; k < n; ++k) s += li(k, i) * li(k, j);
            c(i, j) = s;
            c(j, i) = s;
        }

    // lambda_min(R) >= 1 / ||C||_F; only fall back to a full eigensolve when
    // that bound cannot settle the question.
    double fro = 0.0;
    for (double v : c.values()) fro += v * v;
    fro = std::sqrt(fro);
    if (!(1.0 / fro > singular_eigenvalue_floor)) {
        const auto d = decompose_symmetric(r);
        if (d.values.back() <= singular_eigenvalue_floor)
            throw NotEstimableError("correlation matrix is singular (smallest eigenvalue " +
                                    std::to_string(d.values.back()) + ")");
    }
    return c;
}

}  // namespace detail

/// Partial correlation of each pair given all other variables. Diagonal is 1.
inline Matrix partial_correlations(const CorrelationMatrix& r) {
    const std::size_t n = r.dim();
    const Matrix c = detail::spd_inverse(r.matrix());
    Matrix q(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        q(j, j) = 1.0;
        for (std::size_t k = j + 1; k < n; ++k) {
            const double v = -c(j, k) / std::sqrt(c(j, j) * c(k, k));
            q(j, k) = v;
            q(k, j) = v;
        }
    }
    return q;
}

inline KmoReport kmo(const CorrelationMatrix& r) {
    const Matrix q = partial_correlations(r);
    const std::size_t n = r.dim();
    KmoReport rep;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            if (j == k) continue;
            rep.r_sq_sum += r(j, k) * r(j, k);
            rep.q_sq_sum += q(j, k) * q(j, k);
        }
    if (rep.r_sq_sum == 0.0) throw NotEstimableError("all off-diagonal correlations are zero");
    rep.kmo = rep.r_sq_sum / (rep.r_sq_sum + rep.q_sq_sum);
    return rep;
}

struct CandidateOutcome {
    std::size_t window = 0;
    std::size_t windows_scanned = 0;
    std::size_t not_estimable = 0;
    /// Minimum over the estimable windows; empty when none was estimable.
    std::optional<double> min_kmo;

    /// Usable only if every window was estimable.
    [[nodiscard]] bool estimable() const noexcept { return not_estimable == 0 && min_kmo.has_value(); }
};

struct WindowSearchResult {
    std::optional<std::size_t> chosen_window;
    double threshold = 0.5;
    std::vector<CandidateOutcome> candidates;
};

/// Minimum KMO across every window of one candidate length.
inline CandidateOutcome scan_window(const SeriesMatrix& series, std::size_t k, const RollingOptions& opts = {},
                                    bool drop_first_window = false) {
    const WindowPlan plan = plan_windows(series.length(), k, drop_first_window);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> values(plan.count(), nan);
    for_each_correlation(
        series, plan, opts,
        [&](std::size_t w, const CorrelationMatrix& r) {
            try {
                values[w] = kmo(r).kmo;
            } catch (const NotEstimableError&) {
                values[w] = nan;
            }
        },
        [&](std::size_t w, const DataError&) { values[w] = nan; });

    CandidateOutcome out;
    out.window = k;
    out.windows_scanned = values.size();
    for (double v : values) {
        if (std::isnan(v)) {
            ++out.not_estimable;
            continue;
        }
        out.min_kmo = out.min_kmo ? std::min(*out.min_kmo, v) : v;
    }
    return out;
}

/// Smallest candidate window whose windows are all estimable with KMO at or
/// above `threshold`. `candidates` must be non-empty and ascending.
inline WindowSearchResult select_window(const SeriesMatrix& series, const std::vector<std::size_t>& candidates,
                                        double threshold = 0.5, const RollingOptions& opts = {},
                                        bool drop_first_window = false) {
    if (candidates.empty()) throw ConfigError("window candidate list is empty");
    if (!std::is_sorted(candidates.begin(), candidates.end()) ||
        std::adjacent_find(candidates.begin(), candidates.end()) != candidates.end())
        throw ConfigError("window candidates must be strictly ascending");

    WindowSearchResult res;
    res.threshold = threshold;
    for (std::size_t k : candidates) {
        res.candidates.push_back(scan_window(series, k, opts, drop_first_window));
        const auto& c = res.candidates.back();
        if (!res.chosen_window && c.estimable() && *c.min_kmo >= threshold) res.chosen_window = k;
    }
    return res;
}

}  // namespace pcdrift
