#pragma once

/**
 * @file retention.hpp
 * @brief Classical rules for how many principal components to keep.
 *
 * Cumulative variance: smallest m with t_m = 100 * sum_{k<=m} l_k / sum_k l_k
 * strictly greater than the cut-off. Kaiser: count of l_k above a cut-off
 * (correlation input) or above the mean / 0.7 x mean (covariance variants).
 * Scree and log-eigenvalue diagrams are emitted as plot data only; choosing
 * the elbow is left to the reader.
 */

#include <cmath>
#include <cstddef>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pcdrift/error.hpp"

namespace pcdrift {

/// Number of leading components whose cumulative share of variance exceeds
/// `threshold_pct` percent. Returns the component count when no prefix
/// exceeds it (only possible at 100).
inline std::size_t cumulative_variance(const std::vector<double>& eigenvalues, double threshold_pct) {
    if (!(threshold_pct > 0.0 && threshold_pct <= 100.0))
        throw std::invalid_argument("cumulative variance threshold must be in (0, 100]");
    long double total = 0.0L;
    for (double l : eigenvalues) total += l;
    if (!(total > 0.0L)) throw NumericalError("all eigenvalues are zero");

    long double cum = 0.0L;
    for (std::size_t m = 0; m < eigenvalues.size(); ++m) {
        cum += eigenvalues[m];
        if (100.0L * cum > static_cast<long double>(threshold_pct) * total) return m + 1;
    }
    return eigenvalues.size();
}

enum class KaiserMode {
    correlation,       ///< l_k > cutoff
    covariance_mean,   ///< l_k > mean(l)
    covariance_07mean  ///< l_k > 0.7 mean(l)
};

/// `cutoff` is used only in correlation mode.
inline std::size_t kaiser_rule(const std::vector<double>& eigenvalues, double cutoff,
                               KaiserMode mode = KaiserMode::correlation) {
    double bar = cutoff;
    if (mode != KaiserMode::correlation) {
        long double sum = 0.0L;
        for (double l : eigenvalues) sum += l;
        const double mean = eigenvalues.empty() ? 0.0 : static_cast<double>(sum / eigenvalues.size());
        bar = mode == KaiserMode::covariance_mean ? mean : 0.7 * mean;
    }
    std::size_t m = 0;
    for (double l : eigenvalues) m += l > bar ? 1 : 0;
    return m;
}

struct ScreePoint {
    std::size_t k;  ///< 1-based component rank
    double value;
};

struct ScreeData {
    std::vector<ScreePoint> scree;
    std::vector<ScreePoint> log_scree;
    std::size_t log_omitted = 0;  ///< eigenvalues <= 1e-12 left out of the log diagram
};

inline constexpr double log_scree_floor = 1e-12;

inline ScreeData scree_data(const std::vector<double>& eigenvalues) {
    ScreeData out;
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        const double l = eigenvalues[i];
        out.scree.push_back({i + 1, l});
        if (l > log_scree_floor)
            out.log_scree.push_back({i + 1, std::log(l)});
        else
            ++out.log_omitted;
    }
    return out;
}

struct RetentionReport {
    std::size_t components = 0;
    std::map<double, std::size_t> cumulative;  ///< threshold (percent) -> m
    std::map<double, std::size_t> kaiser;      ///< cutoff -> m
    std::size_t kaiser_covariance_mean = 0;
    std::size_t kaiser_covariance_07mean = 0;
    ScreeData scree;
};

inline RetentionReport retention_report(const std::vector<double>& eigenvalues,
                                        const std::vector<double>& cumulative_thresholds,
                                        const std::vector<double>& kaiser_cutoffs) {
    RetentionReport rep;
    rep.components = eigenvalues.size();
    for (double t : cumulative_thresholds) rep.cumulative[t] = cumulative_variance(eigenvalues, t);
    for (double c : kaiser_cutoffs) rep.kaiser[c] = kaiser_rule(eigenvalues, c);
    rep.kaiser_covariance_mean = kaiser_rule(eigenvalues, 0.0, KaiserMode::covariance_mean);
    rep.kaiser_covariance_07mean = kaiser_rule(eigenvalues, 0.0, KaiserMode::covariance_07mean);
    rep.scree = scree_data(eigenvalues);
    return rep;
}

/// Flat `key=value` lines, one rule result per line.
inline std::string to_key_value(const RetentionReport& rep) {
    std::ostringstream out;
    out << "components=" << rep.components << '\n';
    for (const auto& [t, m] : rep.cumulative) out << "cumulative_variance." << t << "=" << m << '\n';
    for (const auto& [c, m] : rep.kaiser) out << "kaiser." << c << "=" << m << '\n';
    out << "kaiser.covariance_mean=" << rep.kaiser_covariance_mean << '\n';
    out << "kaiser.covariance_07mean=" << rep.kaiser_covariance_07mean << '\n';
    out << "log_scree.omitted=" << rep.scree.log_omitted << '\n';
    return out.str();
}

}  // namespace pcdrift
