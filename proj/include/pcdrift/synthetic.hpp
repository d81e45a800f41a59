#pragma once

/**
 * @file synthetic.hpp
 * @brief Seeded factor-model generators with planted, piecewise-constant
 *        loadings. Used for the shipped fixtures and in tests.
 *
 * Row t of the output is  x_t = L(t) f_t + diag(u(t)) e_t  with f_t and e_t
 * independent standard normals and L(t), u(t) taken from the regime active
 * at t. All randomness comes from std::mt19937_64 (fully specified by the
 * standard) through a Box-Muller transform, so output is identical across
 * platforms and standard libraries.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcdrift/ingest.hpp"
#include "pcdrift/matrix.hpp"
#include "pcdrift/text.hpp"

namespace pcdrift::synthetic {

class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct Regime {
    std::size_t begin = 0;                 ///< first row this regime applies to
    Matrix loadings;                       ///< N x F
    std::vector<double> unique_sd;         ///< N
};

/// ISO date `days` after 2000-01-01.
inline std::string iso_date(std::int64_t days) {
    // civil_from_days (H. Hinnant); 10957 days from 1970-01-01 to 2000-01-01.
    std::int64_t z = days + 10957 + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    if (m <= 2) ++y;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(y), m, d);
    return buf;
}

inline std::vector<std::string> default_labels(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "V%03zu", i + 1);
        out.emplace_back(buf);
    }
    return out;
}

inline SeriesMatrix simulate(std::size_t length, const std::vector<Regime>& regimes, std::uint64_t seed) {
    if (regimes.empty() || regimes.front().begin != 0) throw std::invalid_argument("first regime must begin at 0");
    const std::size_t n = regimes.front().loadings.rows();
    std::size_t factors = 0;
    for (const auto& r : regimes) {
        if (r.loadings.rows() != n || r.unique_sd.size() != n) throw std::invalid_argument("regime shape mismatch");
        factors = std::max(factors, r.loadings.cols());
    }

    GaussianSource gauss(seed);
    SeriesMatrix s;
    s.labels = default_labels(n);
    s.data = Matrix(length, n);
    std::vector<double> f(factors);
    std::size_t active = 0;
    for (std::size_t t = 0; t < length; ++t) {
        while (active + 1 < regimes.size() && regimes[active + 1].begin <= t) ++active;
        const Regime& reg = regimes[active];
        for (auto& v : f) v = gauss();
        for (std::size_t i = 0; i < n; ++i) {
            double x = 0.0;
            for (std::size_t k = 0; k < reg.loadings.cols(); ++k) x += reg.loadings(i, k) * f[k];
            s.data(t, i) = x + reg.unique_sd[i] * gauss();
        }
        s.timestamps.push_back(iso_date(static_cast<std::int64_t>(t) + 1));
    }
    return s;
}

/// Regime with unit-variance variables: uniqueness sd = sqrt(1 - communality).
inline Regime standardized_regime(std::size_t begin, Matrix loadings) {
    Regime r{begin, std::move(loadings), {}};
    for (std::size_t i = 0; i < r.loadings.rows(); ++i) {
        double h = 0.0;
        for (std::size_t k = 0; k < r.loadings.cols(); ++k) h += r.loadings(i, k) * r.loadings(i, k);
        if (h >= 1.0) throw std::invalid_argument("communality must be < 1");
        r.unique_sd.push_back(std::sqrt(1.0 - h));
    }
    return r;
}

/// Price levels whose log returns are `scale` times the series values,
/// starting from `start` one day before the first return.
inline RawSeries to_levels(const SeriesMatrix& returns, double scale = 0.01, double start = 100.0) {
    const std::size_t t_len = returns.length();
    const std::size_t n = returns.width();
    RawSeries raw;
    raw.labels = returns.labels;
    raw.timestamps.push_back(iso_date(0));
    raw.timestamps.insert(raw.timestamps.end(), returns.timestamps.begin(), returns.timestamps.end());
    raw.values = Matrix(t_len + 1, n);
    raw.missing.assign((t_len + 1) * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double level = start;
        raw.values(0, i) = level;
        for (std::size_t t = 0; t < t_len; ++t) {
            level *= std::exp(scale * returns.data(t, i));
            raw.values(t + 1, i) = level;
        }
    }
    return raw;
}

inline void write_csv(const RawSeries& raw, const std::string& path) {
    auto out = open_output(path);
    out << "date";
    for (const auto& l : raw.labels) out << ',' << l;
    out << '\n';
    for (std::size_t t = 0; t < raw.length(); ++t) {
        out << raw.timestamps[t];
        for (std::size_t i = 0; i < raw.width(); ++i)
            out << ',' << (raw.is_missing(t, i) ? std::string() : format_double(raw.values(t, i)));
        out << '\n';
    }
    finish_output(out, path);
}

// Planted structures ----------------------------------------------------------

inline constexpr std::uint64_t one_factor_seed = 20240611;
inline constexpr std::uint64_t two_regime_seed = 20240612;
inline constexpr std::uint64_t rotation_seed = 20240613;

/// N = 8, T = 2000 returns, one stable factor with loadings 0.5 to 0.85.
inline SeriesMatrix one_factor(std::size_t length = 2000, std::uint64_t seed = one_factor_seed) {
    Matrix l(8, 1);
    for (std::size_t i = 0; i < 8; ++i) l(i, 0) = 0.5 + 0.05 * static_cast<double>(i);
    return simulate(length, {standardized_regime(0, l)}, seed);
}

/// Loading patterns of the two-regime fixture: a stable market-like factor
/// (0.8 everywhere) and a second factor (0.4 magnitude) whose sign pattern
/// switches from halves (+ + + + - - - -) to pairs (+ + - - + + - -) at
/// `two_regime_flip`. The two patterns are orthogonal.
inline constexpr std::size_t two_regime_flip = 1000;

inline Matrix two_regime_loadings(bool after_flip) {
    Matrix l(8, 2);
    for (std::size_t i = 0; i < 8; ++i) {
        l(i, 0) = 0.8;
        const bool positive = after_flip ? (i / 2) % 2 == 0 : i < 4;
        l(i, 1) = positive ? 0.4 : -0.4;
    }
    return l;
}

inline SeriesMatrix two_regime(std::size_t length = 2000, std::uint64_t seed = two_regime_seed) {
    return simulate(length,
                    {standardized_regime(0, two_regime_loadings(false)),
                     standardized_regime(two_regime_flip, two_regime_loadings(true))},
                    seed);
}

/// PC1 rotates by exactly 30 degrees at row `rotation_change`: all eight
/// variables load 0.95 on one factor before it, only the first six after.
/// Both population correlation matrices have closed-form first eigenvectors,
/// (1,...,1)/sqrt(8) and (1,1,1,1,1,1,0,0)/sqrt(6), whose cosine is sqrt(3)/2.
inline constexpr std::size_t rotation_change = 1000;

inline Matrix rotation_loadings(bool after) {
    Matrix l(8, 1);
    for (std::size_t i = 0; i < 8; ++i) l(i, 0) = (after && i >= 6) ? 0.0 : 0.95;
    return l;
}

inline SeriesMatrix rotation30(std::size_t length = 2000, std::uint64_t seed = rotation_seed) {
    return simulate(length,
                    {standardized_regime(0, rotation_loadings(false)),
                     standardized_regime(rotation_change, rotation_loadings(true))},
                    seed);
}

}  // namespace pcdrift::synthetic
