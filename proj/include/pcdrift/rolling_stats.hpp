#pragma once

/**
 * @file rolling_stats.hpp
 * @brief Pearson correlation matrices over stride-1 sliding windows.
 *
 * The incremental sweep keeps running sums of the shifted observations and
 * their cross-products (shift = mean of the block's first window) and updates
 * them by adding the entering row and removing the leaving row. The sums are
 * rebuilt from scratch at every window whose index is a multiple of the
 * refresh interval, which bounds drift and makes each block of windows
 * independent: output bits do not depend on how blocks are spread across
 * workers.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pcdrift/correlation_matrix.hpp"
#include "pcdrift/error.hpp"
#include "pcdrift/ingest.hpp"
#include "pcdrift/matrix.hpp"
#include "pcdrift/parallel.hpp"

namespace pcdrift {

struct WindowPlan {
    std::size_t window_length = 0;
    std::vector<std::size_t> starts;

    [[nodiscard]] std::size_t count() const noexcept { return starts.size(); }
};

/// Stride-1 windows of length `k` over a series of `series_length` rows.
/// `drop_first_window` removes the window at offset 0, giving T - k windows.
inline WindowPlan plan_windows(std::size_t series_length, std::size_t k, bool drop_first_window = false) {
    if (k == 0) throw ConfigError("window length must be at least 1");
    if (k > series_length)
        throw DataError("window exceeds series length (k=" + std::to_string(k) +
                        ", T=" + std::to_string(series_length) + ")");
    WindowPlan plan;
    plan.window_length = k;
    for (std::size_t s = drop_first_window ? 1 : 0; s + k <= series_length; ++s) plan.starts.push_back(s);
    if (plan.starts.empty()) throw DataError("no windows remain after dropping the first window");
    return plan;
}

enum class SweepMethod { incremental, naive };

struct RollingOptions {
    std::size_t refresh_interval = 256;
    unsigned workers = 1;
    SweepMethod method = SweepMethod::incremental;
};

namespace detail {

inline std::string window_name(const SeriesMatrix& s, std::size_t start) {
    std::string out = "window starting at row " + std::to_string(start);
    if (start < s.timestamps.size()) out += " (" + s.timestamps[start] + ")";
    return out;
}

[[noreturn]] inline void throw_zero_variance(const SeriesMatrix& s, std::size_t var, std::size_t start) {
    throw DataError("variable '" + s.labels[var] + "' has zero variance in " + window_name(s, start));
}

}  // namespace detail

/// Two-pass centred Pearson correlation of rows [start, start + k).
inline CorrelationMatrix correlation(const SeriesMatrix& series, std::size_t start, std::size_t k) {
    const std::size_t n = series.width();
    if (k == 0 || start + k > series.length()) throw DataError("window exceeds series length");

    std::vector<long double> mean(n, 0.0L);
    for (std::size_t t = start; t < start + k; ++t) {
        const auto row = series.data.row(t);
        for (std::size_t i = 0; i < n; ++i) mean[i] += row[i];
    }
    for (auto& m : mean) m /= static_cast<long double>(k);

    std::vector<long double> dev(n);
    std::vector<long double> cross(n * n, 0.0L);
    for (std::size_t t = start; t < start + k; ++t) {
        const auto row = series.data.row(t);
        for (std::size_t i = 0; i < n; ++i) dev[i] = row[i] - mean[i];
        for (std::size_t i = 0; i < n; ++i) {
            const long double di = dev[i];
            long double* acc = cross.data() + i * n;
            for (std::size_t j = i; j < n; ++j) acc[j] += di * dev[j];
        }
    }

    std::vector<long double> sd(n);
    for (std::size_t i = 0; i < n; ++i) {
        const long double ss = cross[i * n + i];
        const long double scale = static_cast<long double>(k) * mean[i] * mean[i];
        if (ss == 0.0L || ss <= 1e-24L * scale) detail::throw_zero_variance(series, i, start);
        sd[i] = std::sqrt(ss);
    }

    Matrix r(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        r(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const long double v = std::clamp(cross[i * n + j] / (sd[i] * sd[j]), -1.0L, 1.0L);
            r(i, j) = static_cast<double>(v);
            r(j, i) = r(i, j);
        }
    }
    return CorrelationMatrix(std::move(r));
}

namespace detail {

/// Running shifted sums for one block of consecutive windows.
class RunningMoments {
public:
    RunningMoments(const SeriesMatrix& s, std::size_t k)
        : s_(s), k_(k), n_(s.width()), shift_(n_), sum_(n_), peak_(n_), cross_(n_ * (n_ + 1) / 2), buf_(n_) {}

    /// Rebuilds the sums for the window at `start`, re-centring on its mean.
    void reset(std::size_t start) {
        std::fill(shift_.begin(), shift_.end(), 0.0L);
        for (std::size_t t = start; t < start + k_; ++t) {
            const auto row = s_.data.row(t);
            for (std::size_t i = 0; i < n_; ++i) shift_[i] += row[i];
        }
        for (auto& m : shift_) m /= static_cast<long double>(k_);
        std::fill(sum_.begin(), sum_.end(), 0.0L);
        std::fill(peak_.begin(), peak_.end(), 0.0L);
        std::fill(cross_.begin(), cross_.end(), 0.0L);
        for (std::size_t t = start; t < start + k_; ++t) accumulate(t, 1.0L);
        start_ = start;
    }

    /// Slides the window one row forward.
    void advance() {
        accumulate(start_, -1.0L);
        accumulate(start_ + k_, 1.0L);
        ++start_;
    }

    [[nodiscard]] std::size_t start() const noexcept { return start_; }

    /// Writes the correlation matrix of the current window into `out`.
    /// Returns false when some variance is too small, relative to the shifted
    /// second moment or to the largest square added since the last reset, for
    /// the running sums to be trusted.
    bool correlation(Matrix& out) const {
        const long double kk = static_cast<long double>(k_);
        std::vector<long double>& sd = buf_;
        for (std::size_t i = 0; i < n_; ++i) {
            const long double second = cross_[index(i, i)] / kk;
            const long double mean = sum_[i] / kk;
            const long double var = second - mean * mean;
            if (!(second > 0.0L) || var <= 1e-6L * second || peak_[i] > 1e5L * var) return false;
            sd[i] = std::sqrt(var);
        }
        for (std::size_t i = 0; i < n_; ++i) {
            out(i, i) = 1.0;
            const long double mi = sum_[i] / kk;
            for (std::size_t j = i + 1; j < n_; ++j) {
                const long double cov = cross_[index(i, j)] / kk - mi * (sum_[j] / kk);
                const long double v = std::clamp(cov / (sd[i] * sd[j]), -1.0L, 1.0L);
                out(i, j) = static_cast<double>(v);
                out(j, i) = out(i, j);
            }
        }
        return true;
    }

private:
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const noexcept {
        // upper triangle, row-major
        return i * (2 * n_ - i + 1) / 2 + (j - i);
    }

    void accumulate(std::size_t t, long double sign) {
        const auto row = s_.data.row(t);
        for (std::size_t i = 0; i < n_; ++i) buf_[i] = row[i] - shift_[i];
        if (sign > 0.0L)
            for (std::size_t i = 0; i < n_; ++i) peak_[i] = std::max(peak_[i], buf_[i] * buf_[i]);
        for (std::size_t i = 0; i < n_; ++i) {
            const long double xi = sign * buf_[i];
            sum_[i] += xi;
            long double* acc = cross_.data() + index(i, i);
            for (std::size_t j = i; j < n_; ++j) acc[j - i] += xi * buf_[j];
        }
    }

    const SeriesMatrix& s_;
    std::size_t k_;
    std::size_t n_;
    std::size_t start_ = 0;
    std::vector<long double> shift_;
    std::vector<long double> sum_;
    std::vector<long double> peak_;  ///< largest shifted square added since reset
    std::vector<long double> cross_;
    mutable std::vector<long double> buf_;
};

}  // namespace detail

/// Calls `fn(window_index, const CorrelationMatrix&)` for every window of
/// `plan`. Calls for one refresh block happen in ascending order on one
/// thread; distinct blocks may run concurrently. The matrix reference is only
/// valid for the duration of the call.
///
/// A window with a zero-variance column is passed to
/// `on_degenerate(window_index, const DataError&)` instead of `fn`.
template <class Fn, class OnDegenerate>
void for_each_correlation(const SeriesMatrix& series, const WindowPlan& plan, const RollingOptions& opts,
                          Fn&& fn, OnDegenerate&& on_degenerate) {
    const std::size_t w_count = plan.count();
    const std::size_t k = plan.window_length;
    if (w_count == 0) return;
    if (plan.starts.back() + k > series.length()) throw DataError("window plan does not fit the series");
    const std::size_t interval = std::max<std::size_t>(opts.refresh_interval, 1);
    const std::size_t blocks = (w_count + interval - 1) / interval;

    parallel_for_blocks(blocks, opts.workers, [&](std::size_t b) {
        const std::size_t first = b * interval;
        const std::size_t last = std::min(w_count, first + interval);
        auto exact = [&](std::size_t w) {
            CorrelationMatrix r;
            try {
                r = correlation(series, plan.starts[w], k);
            } catch (const DataError& e) {
                on_degenerate(w, e);
                return;
            }
            fn(w, r);
        };
        if (opts.method == SweepMethod::naive) {
            for (std::size_t w = first; w < last; ++w) exact(w);
            return;
        }
        detail::RunningMoments moments(series, k);
        Matrix buffer(series.width(), series.width());
        CorrelationMatrix out;
        for (std::size_t w = first; w < last; ++w) {
            const std::size_t start = plan.starts[w];
            bool fresh = w == first || start != moments.start() + 1;
            if (fresh)
                moments.reset(start);
            else
                moments.advance();
            bool ok = moments.correlation(buffer);
            if (!ok && !fresh) {
                // Re-centre on this window before giving up on the running sums.
                moments.reset(start);
                ok = moments.correlation(buffer);
            }
            if (ok) {
                out = CorrelationMatrix(buffer);
                fn(w, out);
            } else {
                exact(w);
            }
        }
    });
}

/// Throws DataError on the first (lowest-index) window with a zero-variance column.
template <class Fn>
void for_each_correlation(const SeriesMatrix& series, const WindowPlan& plan, const RollingOptions& opts,
                          Fn&& fn) {
    for_each_correlation(series, plan, opts, std::forward<Fn>(fn),
                         [](std::size_t, const DataError& e) { throw e; });
}

/// Correlation matrices for every window of `plan`, in window order.
inline std::vector<CorrelationMatrix> sweep_correlations(const SeriesMatrix& series, const WindowPlan& plan,
                                                         const RollingOptions& opts = {}) {
    std::vector<CorrelationMatrix> out(plan.count());
    for_each_correlation(series, plan, opts,
                         [&](std::size_t w, const CorrelationMatrix& r) { out[w] = r; });
    return out;
}

}  // namespace pcdrift
