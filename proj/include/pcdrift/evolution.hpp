#pragma once

/**
 * @file evolution.hpp
 * @brief Rolling-window PCA: per-component coefficient tracks and the angle
 *        of each eigenvector relative to the first window.
 *
 * Components are matched across windows by eigenvalue rank only. The j-th
 * component of window w is whatever has the j-th largest eigenvalue there,
 * so rank switches show up in the output instead of being smoothed away.
 */

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <span>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pcdrift/adequacy.hpp"
#include "pcdrift/eigen.hpp"
#include "pcdrift/error.hpp"
#include "pcdrift/ingest.hpp"
#include "pcdrift/matrix.hpp"
#include "pcdrift/rolling_stats.hpp"
#include "pcdrift/text.hpp"

namespace pcdrift {

struct SweepResult {
    WindowPlan plan;
    std::vector<std::string> labels;
    Matrix eigenvalues;                ///< W x N, rows descending
    std::vector<Matrix> coefficients;  ///< one W x N matrix per retained component
    std::vector<std::uint8_t> valid;   ///< 0 where the window's R was singular

    [[nodiscard]] std::size_t window_count() const noexcept { return plan.count(); }
    [[nodiscard]] std::size_t width() const noexcept { return labels.size(); }
    [[nodiscard]] std::size_t components() const noexcept { return coefficients.size(); }
    [[nodiscard]] bool is_valid(std::size_t w) const noexcept { return valid[w] != 0; }

    friend bool operator==(const SweepResult& a, const SweepResult& b) {
        // NaN gaps compare unequal under ==, so compare bit patterns.
        auto same = [](const Matrix& x, const Matrix& y) {
            if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
            for (std::size_t i = 0; i < x.values().size(); ++i)
                if (std::bit_cast<std::uint64_t>(x.values()[i]) != std::bit_cast<std::uint64_t>(y.values()[i]))
                    return false;
            return true;
        };
        if (a.plan.window_length != b.plan.window_length || a.plan.starts != b.plan.starts ||
            a.labels != b.labels || a.valid != b.valid || !same(a.eigenvalues, b.eigenvalues) ||
            a.coefficients.size() != b.coefficients.size())
            return false;
        for (std::size_t j = 0; j < a.coefficients.size(); ++j)
            if (!same(a.coefficients[j], b.coefficients[j])) return false;
        return true;
    }
};

struct SweepOptions {
    RollingOptions rolling;
    bool drop_first_window = false;
};

/// Correlation, decomposition and top-`components` eigenvectors for every
/// window of length `k`. Windows whose correlation matrix is singular keep
/// their eigenvalues but get NaN loadings and `valid = 0`.
inline SweepResult sweep(const SeriesMatrix& series, std::size_t k, std::size_t components,
                         const SweepOptions& opts = {}) {
    const std::size_t n = series.width();
    if (components == 0) throw ConfigError("components must be >= 1");
    if (components > n)
        throw ConfigError("components (" + std::to_string(components) + ") exceeds the number of variables (" +
                          std::to_string(n) + ")");

    SweepResult res;
    res.plan = plan_windows(series.length(), k, opts.drop_first_window);
    res.labels = series.labels;
    const std::size_t w_count = res.plan.count();
    res.eigenvalues = Matrix(w_count, n);
    res.coefficients.assign(components, Matrix(w_count, n));
    res.valid.assign(w_count, 0);

    for_each_correlation(series, res.plan, opts.rolling, [&](std::size_t w, const CorrelationMatrix& r) {
        const EigenDecomposition d = decompose(r);
        std::copy(d.values.begin(), d.values.end(), res.eigenvalues.row(w).begin());
        const bool ok = d.values.back() > singular_eigenvalue_floor;
        res.valid[w] = ok ? 1 : 0;
        for (std::size_t j = 0; j < components; ++j) {
            auto row = res.coefficients[j].row(w);
            for (std::size_t i = 0; i < n; ++i)
                row[i] = ok ? d.vectors(i, j) : std::numeric_limits<double>::quiet_NaN();
        }
    });

    if (std::none_of(res.valid.begin(), res.valid.end(), [](auto v) { return v != 0; }))
        throw NumericalError("every window has a singular correlation matrix (k=" + std::to_string(k) +
                             ", N=" + std::to_string(n) + ")");
    return res;
}

enum class OrderBasis { midpoint_sort, input_order };

inline OrderBasis parse_order_basis(std::string_view s) {
    if (s == "midpoint_sort") return OrderBasis::midpoint_sort;
    if (s == "input_order") return OrderBasis::input_order;
    throw ConfigError("unknown order_basis '" + std::string(s) + "' (expected midpoint_sort or input_order)");
}

inline const char* to_string(OrderBasis b) {
    return b == OrderBasis::midpoint_sort ? "midpoint_sort" : "input_order";
}

struct CoefficientTrack {
    std::size_t component = 0;
    OrderBasis basis = OrderBasis::input_order;
    /// Display position -> variable index.
    std::vector<std::size_t> row_order;
    /// Window whose loadings defined the order (midpoint_sort only).
    std::size_t sort_window = 0;
    /// W x N; column c holds variable row_order[c].
    Matrix matrix;
    std::vector<std::uint8_t> valid;
    std::vector<std::string> labels;  ///< in display order
};

namespace detail {

inline void check_component(const SweepResult& s, std::size_t j) {
    if (j >= s.components())
        throw ConfigError("component " + std::to_string(j + 1) + " was not retained by the sweep (J=" +
                          std::to_string(s.components()) + ")");
}

/// Valid window nearest to floor(W/2), preferring the later one on ties.
inline std::size_t midpoint_window(const SweepResult& s) {
    const std::size_t w_count = s.window_count();
    const std::size_t mid = w_count / 2;
    for (std::size_t d = 0; d < w_count; ++d) {
        if (mid + d < w_count && s.is_valid(mid + d)) return mid + d;
        if (d <= mid && s.is_valid(mid - d)) return mid - d;
    }
    return mid;
}

}  // namespace detail

/// Loadings of component `j` (0-based) across all windows with a fixed
/// variable order. midpoint_sort orders variables by ascending loading at the
/// middle window; input_order keeps the series order.
inline CoefficientTrack coefficient_track(const SweepResult& s, std::size_t j, OrderBasis basis) {
    detail::check_component(s, j);
    const std::size_t n = s.width();
    const Matrix& src = s.coefficients[j];

    CoefficientTrack t;
    t.component = j;
    t.basis = basis;
    t.valid = s.valid;
    t.row_order.resize(n);
    std::iota(t.row_order.begin(), t.row_order.end(), std::size_t{0});
    if (basis == OrderBasis::midpoint_sort) {
        t.sort_window = detail::midpoint_window(s);
        const auto row = src.row(t.sort_window);
        std::stable_sort(t.row_order.begin(), t.row_order.end(),
                         [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
    }

    t.matrix = Matrix(s.window_count(), n);
    for (std::size_t w = 0; w < s.window_count(); ++w)
        for (std::size_t c = 0; c < n; ++c) t.matrix(w, c) = src(w, t.row_order[c]);
    for (auto i : t.row_order) t.labels.push_back(s.labels[i]);
    return t;
}

struct AngleSeries {
    std::size_t component = 0;
    std::size_t reference_window = 0;
    std::vector<double> angles_raw;      ///< radians in [0, pi]; NaN in gaps
    std::vector<double> angles_aligned;  ///< radians in [0, pi/2]; NaN in gaps
    std::vector<std::uint8_t> flip_flags;
    std::optional<std::size_t> marker_variable;
    std::vector<double> marker_values;

    [[nodiscard]] std::size_t size() const noexcept { return angles_raw.size(); }
};

/// Angle between `a` and `b` (unit vectors) with the cosine clamped to [-1, 1].
inline double unit_vector_angle(std::span<const double> a, std::span<const double> b) {
    return std::acos(std::clamp(dot(a, b), -1.0, 1.0));
}

/// Angle of component `j`'s eigenvector in each window against the first
/// window. The raw angle keeps the sign ambiguity of eigenvectors; the aligned
/// angle folds v and -v together.
inline AngleSeries angle_series(const SweepResult& s, std::size_t j,
                                std::optional<std::size_t> marker_variable = std::nullopt) {
    detail::check_component(s, j);
    if (marker_variable && *marker_variable >= s.width())
        throw ConfigError("marker variable index out of range");
    const Matrix& v = s.coefficients[j];
    const std::size_t w_count = s.window_count();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    AngleSeries a;
    a.component = j;
    a.marker_variable = marker_variable;
    a.angles_raw.assign(w_count, nan);
    a.angles_aligned.assign(w_count, nan);
    a.flip_flags.assign(w_count, 0);
    a.marker_values.assign(w_count, nan);

    std::size_t ref = 0;
    while (ref < w_count && !s.is_valid(ref)) ++ref;
    a.reference_window = ref;
    if (ref == w_count) return a;

    const auto base = v.row(ref);
    for (std::size_t w = ref; w < w_count; ++w) {
        if (!s.is_valid(w)) continue;
        const auto cur = v.row(w);
        const double c = dot(base, cur);
        const double raw = w == ref ? 0.0 : std::acos(std::clamp(c, -1.0, 1.0));
        a.angles_raw[w] = raw;
        a.angles_aligned[w] = std::min(raw, std::numbers::pi - raw);
        a.flip_flags[w] = c < 0.0 ? 1 : 0;
        if (marker_variable) a.marker_values[w] = cur[*marker_variable];
    }
    return a;
}

// Persistence ---------------------------------------------------------------

namespace detail {

inline void write_f64_le(std::ostream& out, std::span<const double> values) {
    std::vector<unsigned char> bytes(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto u = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>(u >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline void read_f64_le(const std::string& path, Matrix& m) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    const std::size_t count = m.rows() * m.cols();
    std::vector<unsigned char> bytes(count * 8);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size() || in.peek() != std::char_traits<char>::eof())
        throw DataError("'" + path + "' does not hold " + std::to_string(count) + " float64 values");
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
        m.data()[i] = std::bit_cast<double>(u);
    }
}

inline std::string component_stem(std::size_t j) {
    std::string s = std::to_string(j + 1);
    return "pc" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
}

}  // namespace detail

/// Writes `manifest.txt`, `eigenvalues.f64`, `pcNN.f64` and `valid.txt` into
/// `dir`. Matrices are raw little-endian float64, row-major.
inline void save_sweep(const SweepResult& s, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());

    {
        const std::string path = (dir / "manifest.txt").string();
        auto out = open_output(path);
        out << "format=pcdrift-sweep\n"
            << "version=1\n"
            << "byte_order=little_endian\n"
            << "scalar=float64\n"
            << "layout=row_major\n"
            << "windows=" << s.window_count() << '\n'
            << "variables=" << s.width() << '\n'
            << "components=" << s.components() << '\n'
            << "window_length=" << s.plan.window_length << '\n'
            << "first_start=" << (s.plan.starts.empty() ? 0 : s.plan.starts.front()) << '\n'
            << "stride=1\n";
        for (std::size_t i = 0; i < s.width(); ++i) out << "label." << i << '=' << s.labels[i] << '\n';
        finish_output(out, path);
    }
    {
        const std::string path = (dir / "eigenvalues.f64").string();
        auto out = open_output(path);
        detail::write_f64_le(out, s.eigenvalues.values());
        finish_output(out, path);
    }
    for (std::size_t j = 0; j < s.components(); ++j) {
        const std::string path = (dir / (detail::component_stem(j) + ".f64")).string();
        auto out = open_output(path);
        detail::write_f64_le(out, s.coefficients[j].values());
        finish_output(out, path);
    }
    {
        const std::string path = (dir / "valid.txt").string();
        auto out = open_output(path);
        for (auto v : s.valid) out << static_cast<int>(v) << '\n';
        finish_output(out, path);
    }
}

inline SweepResult load_sweep(const std::filesystem::path& dir) {
    const std::string mpath = (dir / "manifest.txt").string();
    std::ifstream in(mpath);
    if (!in) throw DataError("cannot open '" + mpath + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto num = [&](const std::string& key) -> std::size_t {
        const auto it = kv.find(key);
        if (it == kv.end()) throw DataError(mpath + ": missing key '" + key + "'");
        std::size_t v = 0;
        const auto res = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
        if (res.ec != std::errc{}) throw DataError(mpath + ": bad value for '" + key + "'");
        return v;
    };
    if (kv["format"] != "pcdrift-sweep" || kv["byte_order"] != "little_endian" || kv["scalar"] != "float64")
        throw DataError(mpath + ": not a pcdrift sweep manifest");

    SweepResult s;
    const std::size_t w_count = num("windows");
    const std::size_t n = num("variables");
    const std::size_t j_count = num("components");
    s.plan.window_length = num("window_length");
    const std::size_t first = num("first_start");
    for (std::size_t w = 0; w < w_count; ++w) s.plan.starts.push_back(first + w);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = kv.find("label." + std::to_string(i));
        if (it == kv.end()) throw DataError(mpath + ": missing label " + std::to_string(i));
        s.labels.push_back(it->second);
    }
    s.eigenvalues = Matrix(w_count, n);
    detail::read_f64_le((dir / "eigenvalues.f64").string(), s.eigenvalues);
    for (std::size_t j = 0; j < j_count; ++j) {
        s.coefficients.emplace_back(w_count, n);
        detail::read_f64_le((dir / (detail::component_stem(j) + ".f64")).string(), s.coefficients.back());
    }
    std::ifstream vin(dir / "valid.txt");
    int flag = 0;
    while (vin >> flag) s.valid.push_back(flag != 0 ? 1 : 0);
    if (s.valid.size() != w_count) throw DataError("valid.txt does not list every window");
    return s;
}

/// CSV: `window` then one column per variable in display order.
inline void export_track_csv(const CoefficientTrack& t, const std::string& path) {
    auto out = open_output(path);
    out << "window";
    for (const auto& l : t.labels) out << ',' << l;
    out << '\n';
    for (std::size_t w = 0; w < t.matrix.rows(); ++w) {
        out << w;
        for (double v : t.matrix.row(w)) out << ',' << format_double(v);
        out << '\n';
    }
    finish_output(out, path);
}

}  // namespace pcdrift
