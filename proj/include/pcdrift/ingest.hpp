#pragma once

/**
 * @file ingest.hpp
 * @brief Wide-layout CSV loading, complete-history filtering and return conversion.
 *
 * Input layout: a mandatory header row (`date,<label>,<label>,...`), one row
 * per observation with an ISO-8601 date in the first column, decimal-point
 * numerics, and an empty cell for a missing observation.
 */

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_set>
#include <vector>

#include "pcdrift/error.hpp"
#include "pcdrift/matrix.hpp"

namespace pcdrift {

/// Levels as read from disk. Missing cells hold NaN and are flagged in `missing`.
struct RawSeries {
    std::vector<std::string> labels;
    std::vector<std::string> timestamps;
    Matrix values;                      ///< T x N
    std::vector<std::uint8_t> missing;  ///< T x N, row-major

    [[nodiscard]] std::size_t length() const noexcept { return timestamps.size(); }
    [[nodiscard]] std::size_t width() const noexcept { return labels.size(); }
    [[nodiscard]] bool is_missing(std::size_t t, std::size_t i) const noexcept {
        return missing[t * width() + i] != 0;
    }
    [[nodiscard]] std::size_t missing_count() const noexcept {
        std::size_t n = 0;
        for (auto m : missing) n += m;
        return n;
    }
};

/// Analysis series: complete, one column per variable.
struct SeriesMatrix {
    std::vector<std::string> labels;
    std::vector<std::string> timestamps;
    Matrix data;  ///< T x N

    [[nodiscard]] std::size_t length() const noexcept { return data.rows(); }
    [[nodiscard]] std::size_t width() const noexcept { return data.cols(); }
};

enum class ReturnKind { log, simple, none };

inline ReturnKind parse_return_kind(std::string_view s) {
    if (s == "log") return ReturnKind::log;
    if (s == "simple") return ReturnKind::simple;
    if (s == "none") return ReturnKind::none;
    throw ConfigError("unknown returns_kind '" + std::string(s) + "' (expected log, simple or none)");
}

inline const char* to_string(ReturnKind k) {
    switch (k) {
        case ReturnKind::log: return "log";
        case ReturnKind::simple: return "simple";
        case ReturnKind::none: return "none";
    }
    return "?";
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t pos = 0;
    while (true) {
        const auto next = line.find(',', pos);
        cells.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return cells;
}

inline std::string at(std::size_t row, std::size_t col) {
    return "row " + std::to_string(row) + ", column " + std::to_string(col) + ": ";
}

/// Sortable key for an ISO-8601 date or date-time: year, month, day, hour,
/// minute, second. Accepts `YYYY-MM-DD` with an optional `THH:MM[:SS]` (or a
/// space instead of `T`).
inline bool parse_iso_date(std::string_view s, std::array<int, 6>& key) {
    auto digits = [&](std::size_t pos, std::size_t len, int& out) {
        if (pos + len > s.size()) return false;
        const auto* first = s.data() + pos;
        const auto res = std::from_chars(first, first + len, out);
        return res.ec == std::errc{} && res.ptr == first + len && first[0] != '-' && first[0] != '+';
    };
    key = {0, 0, 0, 0, 0, 0};
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return false;
    if (!digits(0, 4, key[0]) || !digits(5, 2, key[1]) || !digits(8, 2, key[2])) return false;
    if (key[1] < 1 || key[1] > 12) return false;
    static constexpr std::array<int, 12> days{31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (key[2] < 1 || key[2] > days[static_cast<std::size_t>(key[1] - 1)]) return false;
    if (key[1] == 2 && key[2] == 29) {
        const int y = key[0];
        if (!((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) return false;
    }
    if (s.size() == 10) return true;
    if (s[10] != 'T' && s[10] != ' ') return false;
    if (s.size() != 16 && s.size() != 19) return false;
    if (s[13] != ':' || !digits(11, 2, key[3]) || !digits(14, 2, key[4])) return false;
    if (s.size() == 19 && (s[16] != ':' || !digits(17, 2, key[5]))) return false;
    return key[3] < 24 && key[4] < 60 && key[5] < 61;
}

}  // namespace detail

/// Parses wide-layout CSV text. `origin` names the source in error messages.
inline RawSeries parse_csv(std::istream& in, const std::string& origin = "input") {
    RawSeries raw;
    std::string line;
    std::size_t line_no = 0;

    // Header
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
        if (detail::trim(view).empty()) continue;
        const auto cells = detail::split_commas(view);
        if (cells.size() < 2) throw DataError(origin + ": header needs a date column and at least one variable");
        std::unordered_set<std::string_view> seen;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (cells[c].empty())
                throw DataError(origin + ": " + detail::at(line_no, c + 1) + "empty variable label");
            if (!seen.insert(cells[c]).second)
                throw DataError(origin + ": " + detail::at(line_no, c + 1) + "duplicate label '" +
                                std::string(cells[c]) + "'");
            raw.labels.emplace_back(cells[c]);
        }
        have_header = true;
        break;
    }
    if (!have_header) throw DataError(origin + ": missing header row");

    const std::size_t n = raw.labels.size();
    std::vector<double> values;
    std::array<int, 6> prev_key{};
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_commas(line);
        if (cells.size() != n + 1)
            throw DataError(origin + ": row " + std::to_string(line_no) + ": ragged row (" +
                            std::to_string(cells.size()) + " cells, expected " + std::to_string(n + 1) + ")");
        std::array<int, 6> key{};
        if (!detail::parse_iso_date(cells[0], key))
            throw DataError(origin + ": " + detail::at(line_no, 1) + "malformed date '" + std::string(cells[0]) + "'");
        if (!raw.timestamps.empty()) {
            if (key == prev_key)
                throw DataError(origin + ": row " + std::to_string(line_no) + ": duplicate timestamp '" +
                                std::string(cells[0]) + "'");
            if (key < prev_key)
                throw DataError(origin + ": row " + std::to_string(line_no) + ": non-monotonic timestamp '" +
                                std::string(cells[0]) + "'");
        }
        prev_key = key;
        raw.timestamps.emplace_back(cells[0]);
        for (std::size_t c = 1; c <= n; ++c) {
            const auto cell = cells[c];
            if (cell.empty()) {
                values.push_back(std::nan(""));
                raw.missing.push_back(1);
                continue;
            }
            double v = 0.0;
            const auto* first = cell.data();
            const auto* last = first + cell.size();
            if (*first == '+') ++first;
            const auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v))
                throw DataError(origin + ": " + detail::at(line_no, c + 1) + "malformed number '" +
                                std::string(cell) + "'");
            values.push_back(v);
            raw.missing.push_back(0);
        }
    }

    raw.values = Matrix(raw.timestamps.size(), n);
    std::copy(values.begin(), values.end(), raw.values.data());
    return raw;
}

inline RawSeries load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse_csv(in, path);
}

struct CompletenessFilter {
    RawSeries series;
    std::vector<std::string> dropped;
};

/// Keeps exactly the columns without a missing cell, in input order.
inline CompletenessFilter filter_complete(const RawSeries& raw) {
    const std::size_t t_len = raw.length();
    const std::size_t n = raw.width();
    std::vector<std::size_t> keep;
    CompletenessFilter out;
    for (std::size_t i = 0; i < n; ++i) {
        bool complete = true;
        for (std::size_t t = 0; t < t_len && complete; ++t) complete = !raw.is_missing(t, i);
        if (complete)
            keep.push_back(i);
        else
            out.dropped.push_back(raw.labels[i]);
    }
    if (keep.empty()) throw DataError("no complete series");

    RawSeries& s = out.series;
    s.timestamps = raw.timestamps;
    for (auto i : keep) s.labels.push_back(raw.labels[i]);
    s.values = Matrix(t_len, keep.size());
    s.missing.assign(t_len * keep.size(), 0);
    for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t c = 0; c < keep.size(); ++c) s.values(t, c) = raw.values(t, keep[c]);
    return out;
}

/// Converts levels to analysis values. Return rows are stamped with the later
/// of the two dates they span.
inline SeriesMatrix to_returns(const RawSeries& raw, ReturnKind kind) {
    if (raw.missing_count() != 0) throw DataError("series has missing cells; apply filter_complete first");
    const std::size_t t_len = raw.length();
    const std::size_t n = raw.width();

    SeriesMatrix out;
    out.labels = raw.labels;
    if (kind == ReturnKind::none) {
        out.timestamps = raw.timestamps;
        out.data = raw.values;
        return out;
    }
    if (t_len < 2) throw DataError("need at least two observations to form returns");

    out.timestamps.assign(raw.timestamps.begin() + 1, raw.timestamps.end());
    out.data = Matrix(t_len - 1, n);
    for (std::size_t t = 0; t + 1 < t_len; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double a = raw.values(t, i);
            const double b = raw.values(t + 1, i);
            if (kind == ReturnKind::log) {
                if (!(a > 0.0) || !(b > 0.0)) {
                    const std::size_t bad = a > 0.0 ? t + 1 : t;
                    throw DataError("non-positive level for log returns: variable '" + raw.labels[i] +
                                    "' on " + raw.timestamps[bad]);
                }
                out.data(t, i) = std::log(b / a);
            } else {
                if (a == 0.0)
                    throw DataError("zero level for simple returns: variable '" + raw.labels[i] + "' on " +
                                    raw.timestamps[t]);
                out.data(t, i) = (b - a) / a;
            }
        }
    }
    return out;
}

/// Throws if any column is constant over the full span.
inline void require_variation(const SeriesMatrix& s) {
    for (std::size_t i = 0; i < s.width(); ++i) {
        bool varies = false;
        for (std::size_t t = 1; t < s.length() && !varies; ++t) varies = s.data(t, i) != s.data(0, i);
        if (!varies) throw DataError("variable '" + s.labels[i] + "' has zero variance over the full span");
    }
}

}  // namespace pcdrift
