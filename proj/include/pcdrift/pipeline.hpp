#pragma once

/**
 * @file pipeline.hpp
 * @brief End-to-end run: ingest, window selection, sweep, retention, render.
 *
 * Configuration is a text file of `key = value` lines (`#` starts a comment,
 * lists are comma-separated). Keys are the RunConfig field names.
 *
 * Output tree (relative to output_dir):
 *
 *     run.log                 version, config echo, start/finish timestamps
 *     manifest.txt            series shape, chosen window, W, KMO search summary
 *     kmo_search.csv          per-candidate minimum KMO (window = auto only)
 *     retention.txt           retention rules on the full-period correlation matrix
 *     scree.csv, log_scree.csv
 *     heatmaps/pcNN.ppm       one per component, plus pcNN.ppm.txt sidecar
 *     tracks/pcNN.csv         coefficient track in display order
 *     angles/pcNN.csv         angle series against the first window
 *     sweep/                  binary sweep result (see save_sweep)
 *     INCOMPLETE              present only when the run failed
 */

#include <chrono>
#include <cstddef>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pcdrift/adequacy.hpp"
#include "pcdrift/eigen.hpp"
#include "pcdrift/error.hpp"
#include "pcdrift/evolution.hpp"
#include "pcdrift/ingest.hpp"
#include "pcdrift/render.hpp"
#include "pcdrift/retention.hpp"
#include "pcdrift/rolling_stats.hpp"
#include "pcdrift/text.hpp"
#include "pcdrift/version.hpp"

namespace pcdrift {

struct RunConfig {
    std::string input_path;
    ReturnKind returns_kind = ReturnKind::log;
    std::optional<std::size_t> window;  ///< empty = auto (KMO search)
    std::vector<std::size_t> window_candidates;  ///< empty = default grid for returns_kind
    double kmo_threshold = 0.5;
    long long components = 10;
    OrderBasis order_basis = OrderBasis::midpoint_sort;
    std::string marker_variable = "last";
    std::vector<double> cumulative_thresholds{60.0, 70.0, 80.0, 90.0};
    std::vector<double> kaiser_cutoffs{1.0, 0.7};
    std::string output_dir;
    bool drop_first_window = false;
    long long refresh_interval = 256;
    std::optional<double> value_clip;  ///< empty = 99th percentile of |loading|
    long long cell_width = 1;
    long long cell_height = 1;
};

/// Candidate grid used when `window = auto` and no list is given: trading-day
/// steps for return series, whole years of daily data for raw levels.
inline std::vector<std::size_t> default_window_candidates(ReturnKind kind) {
    if (kind == ReturnKind::none) {
        std::vector<std::size_t> out;
        for (std::size_t y = 1; y <= 10; ++y) out.push_back(365 * y);
        return out;
    }
    return {50, 100, 150, 200, 250, 300};
}

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "input_path",     "returns_kind",      "window",         "window_candidates", "kmo_threshold",
        "components",     "order_basis",       "marker_variable", "cumulative_thresholds",
        "kaiser_cutoffs", "output_dir",        "drop_first_window", "refresh_interval", "value_clip",
        "cell_width",     "cell_height"};
    return keys;
}

namespace detail {

inline bool parse_number(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_integer(std::string_view s, long long& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

template <class T, class Parse>
bool parse_list(std::string_view s, std::vector<T>& out, Parse parse) {
    out.clear();
    for (auto cell : split_commas(s)) {
        T v{};
        if (!parse(cell, v)) return false;
        out.push_back(v);
    }
    return true;
}

inline std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
}

inline std::string join(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

}  // namespace detail

/// Applies one `key = value` setting. Returns a diagnostic, empty on success.
inline std::string apply_setting(RunConfig& c, const std::string& key, std::string_view raw) {
    const std::string_view value = detail::trim(raw);
    auto bad = [&](const char* what) { return key + ": " + what + " (got '" + std::string(value) + "')"; };
    double d = 0.0;
    long long i = 0;

    if (key == "input_path") {
        c.input_path = value;
    } else if (key == "output_dir") {
        c.output_dir = value;
    } else if (key == "returns_kind") {
        if (value == "log" || value == "simple" || value == "none")
            c.returns_kind = parse_return_kind(value);
        else
            return bad("expected log, simple or none");
    } else if (key == "window") {
        if (value == "auto") {
            c.window.reset();
        } else if (detail::parse_integer(value, i)) {
            if (i < 1) return "window must be >= 1 or auto";
            c.window = static_cast<std::size_t>(i);
        } else {
            return bad("expected a positive integer or auto");
        }
    } else if (key == "window_candidates") {
        // An empty list selects the default grid.
        std::vector<long long> v;
        if (!value.empty() && !detail::parse_list(value, v, detail::parse_integer))
            return bad("expected a list of integers");
        c.window_candidates.clear();
        for (auto x : v) {
            if (x < 1) return "window_candidates must all be >= 1";
            c.window_candidates.push_back(static_cast<std::size_t>(x));
        }
    } else if (key == "kmo_threshold") {
        if (!detail::parse_number(value, d)) return bad("expected a number");
        c.kmo_threshold = d;
    } else if (key == "components") {
        if (!detail::parse_integer(value, i)) return bad("expected an integer");
        c.components = i;
    } else if (key == "order_basis") {
        if (value != "midpoint_sort" && value != "input_order") return bad("expected midpoint_sort or input_order");
        c.order_basis = parse_order_basis(value);
    } else if (key == "marker_variable") {
        c.marker_variable = value;
    } else if (key == "cumulative_thresholds") {
        if (!detail::parse_list(value, c.cumulative_thresholds, detail::parse_number))
            return bad("expected a list of numbers");
    } else if (key == "kaiser_cutoffs") {
        if (!detail::parse_list(value, c.kaiser_cutoffs, detail::parse_number)) return bad("expected a list of numbers");
    } else if (key == "drop_first_window") {
        if (value == "true" || value == "1")
            c.drop_first_window = true;
        else if (value == "false" || value == "0")
            c.drop_first_window = false;
        else
            return bad("expected true or false");
    } else if (key == "refresh_interval") {
        if (!detail::parse_integer(value, i)) return bad("expected an integer");
        c.refresh_interval = i;
    } else if (key == "value_clip") {
        if (value == "auto") {
            c.value_clip.reset();
        } else {
            if (!detail::parse_number(value, d)) return bad("expected a number or auto");
            c.value_clip = d;
        }
    } else if (key == "cell_width" || key == "cell_height") {
        if (!detail::parse_integer(value, i)) return bad("expected an integer");
        (key == "cell_width" ? c.cell_width : c.cell_height) = i;
    } else {
        return "unknown key '" + key + "'";
    }
    return {};
}

/// Every violated invariant of a parsed config.
inline std::vector<std::string> check_config(const RunConfig& c) {
    std::vector<std::string> diag;
    if (c.input_path.empty()) diag.emplace_back("input_path is required");
    if (c.output_dir.empty()) diag.emplace_back("output_dir is required");
    if (c.components < 1) diag.emplace_back("components must be ≥ 1");
    for (double t : c.cumulative_thresholds)
        if (!(t > 0.0 && t <= 100.0))
            diag.push_back("cumulative threshold " + format_double(t) + " out of range (0, 100]");
    for (double k : c.kaiser_cutoffs)
        if (!(k > 0.0)) diag.push_back("kaiser cutoff " + format_double(k) + " must be > 0");
    if (!(c.kmo_threshold >= 0.0 && c.kmo_threshold <= 1.0))
        diag.push_back("kmo_threshold " + format_double(c.kmo_threshold) + " out of range [0, 1]");
    if (c.refresh_interval < 1) diag.emplace_back("refresh_interval must be ≥ 1");
    if (c.value_clip && !(*c.value_clip > 0.0)) diag.emplace_back("value_clip must be > 0");
    if (c.cell_width < 1 || c.cell_height < 1) diag.emplace_back("cell_width and cell_height must be ≥ 1");
    for (std::size_t i = 1; i < c.window_candidates.size(); ++i)
        if (c.window_candidates[i] <= c.window_candidates[i - 1]) {
            diag.emplace_back("window_candidates must be strictly ascending");
            break;
        }
    return diag;
}

struct ConfigParse {
    RunConfig config;
    std::vector<std::string> diagnostics;  ///< syntax errors, then invariant violations
};

inline ConfigParse parse_config(std::istream& in, const std::string& origin = "config") {
    ConfigParse out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = detail::trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        const std::string where = origin + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) {
            out.diagnostics.push_back(where + "expected key = value");
            continue;
        }
        const std::string key(detail::trim(view.substr(0, eq)));
        if (auto msg = apply_setting(out.config, key, view.substr(eq + 1)); !msg.empty())
            out.diagnostics.push_back(where + msg);
    }
    return out;
}

inline ConfigParse parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    return parse_config(in, path);
}

/// Parses and checks a config file without touching any data.
inline std::vector<std::string> validate(const std::string& config_path) {
    ConfigParse p = parse_config_file(config_path);
    for (auto& d : check_config(p.config)) p.diagnostics.push_back(std::move(d));
    return p.diagnostics;
}

/// `key=value` lines for every setting, in `config_keys()` order.
inline std::string echo_config(const RunConfig& c) {
    std::ostringstream o;
    o << "input_path=" << c.input_path << '\n'
      << "returns_kind=" << to_string(c.returns_kind) << '\n'
      << "window=" << (c.window ? std::to_string(*c.window) : std::string("auto")) << '\n'
      << "window_candidates=" << detail::join(c.window_candidates) << '\n'
      << "kmo_threshold=" << format_double(c.kmo_threshold) << '\n'
      << "components=" << c.components << '\n'
      << "order_basis=" << to_string(c.order_basis) << '\n'
      << "marker_variable=" << c.marker_variable << '\n'
      << "cumulative_thresholds=" << detail::join(c.cumulative_thresholds) << '\n'
      << "kaiser_cutoffs=" << detail::join(c.kaiser_cutoffs) << '\n'
      << "output_dir=" << c.output_dir << '\n'
      << "drop_first_window=" << (c.drop_first_window ? "true" : "false") << '\n'
      << "refresh_interval=" << c.refresh_interval << '\n'
      << "value_clip=" << (c.value_clip ? format_double(*c.value_clip) : std::string("auto")) << '\n'
      << "cell_width=" << c.cell_width << '\n'
      << "cell_height=" << c.cell_height << '\n';
    return o.str();
}

/// Execution settings that never change results.
struct RunOptions {
    unsigned workers = 1;
};

struct RunSummary {
    std::size_t series_length = 0;  ///< after return conversion
    std::size_t variables = 0;
    std::size_t window = 0;
    std::size_t windows = 0;
    std::vector<std::string> dropped;
    std::optional<WindowSearchResult> search;
};

namespace detail {

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream o;
    o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return o.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_output(path.string());
    out << text;
    finish_output(out, path.string());
}

inline void write_search_table(const WindowSearchResult& s, const std::filesystem::path& path) {
    std::ostringstream o;
    o << "window,windows,not_estimable,min_kmo,selected\n";
    for (const auto& c : s.candidates)
        o << c.window << ',' << c.windows_scanned << ',' << c.not_estimable << ','
          << (c.min_kmo ? format_double(*c.min_kmo) : std::string()) << ','
          << (s.chosen_window && *s.chosen_window == c.window ? 1 : 0) << '\n';
    write_text(path, o.str());
}

inline std::size_t resolve_marker(const RunConfig& c, const std::vector<std::string>& labels) {
    if (c.marker_variable == "last") return labels.size() - 1;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == c.marker_variable) return i;
    throw ConfigError("marker_variable '" + c.marker_variable + "' is not a retained variable");
}

/// Removes what a previous run may have left behind.
inline void clear_outputs(const std::filesystem::path& root) {
    for (const char* d : {"heatmaps", "tracks", "angles", "sweep"}) std::filesystem::remove_all(root / d);
    for (const char* f : {"run.log", "manifest.txt", "kmo_search.csv", "retention.txt", "scree.csv",
                          "log_scree.csv", "INCOMPLETE"})
        std::filesystem::remove(root / f);
}

}  // namespace detail

/// Runs the whole pipeline and writes the output tree. On failure an
/// `INCOMPLETE` file holding the error message is left in output_dir and the
/// error is rethrown.
inline RunSummary run(const RunConfig& config, const RunOptions& options = {}) {
    namespace fs = std::filesystem;
    if (auto diag = check_config(config); !diag.empty()) throw ConfigError(diag.front());

    const fs::path root(config.output_dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw DataError("cannot create output directory '" + root.string() + "': " + ec.message());
    detail::clear_outputs(root);

    std::ostringstream log;
    log << "pcdrift " << version << '\n' << "started_at=" << detail::utc_now() << '\n' << echo_config(config);

    RunSummary summary;
    try {
        const RawSeries raw = load_csv(config.input_path);
        CompletenessFilter filtered = filter_complete(raw);
        summary.dropped = filtered.dropped;
        const SeriesMatrix series = to_returns(filtered.series, config.returns_kind);
        require_variation(series);
        summary.series_length = series.length();
        summary.variables = series.width();
        log << "input_rows=" << raw.length() << '\n'
            << "input_variables=" << raw.width() << '\n'
            << "dropped_variables=" << filtered.dropped.size() << '\n';

        RollingOptions rolling;
        rolling.refresh_interval = static_cast<std::size_t>(config.refresh_interval);
        rolling.workers = options.workers;

        if (config.window) {
            summary.window = *config.window;
        } else {
            const auto candidates = config.window_candidates.empty()
                                        ? default_window_candidates(config.returns_kind)
                                        : config.window_candidates;
            std::vector<std::size_t> usable;
            for (auto k : candidates)
                if (k <= series.length()) usable.push_back(k);
            if (usable.empty()) throw DataError("every window candidate exceeds the series length");
            summary.search =
                select_window(series, usable, config.kmo_threshold, rolling, config.drop_first_window);
            detail::write_search_table(*summary.search, root / "kmo_search.csv");
            if (!summary.search->chosen_window)
                throw NumericalError("no candidate window keeps KMO >= " + format_double(config.kmo_threshold) +
                                     " in every window");
            summary.window = *summary.search->chosen_window;
        }

        const auto components = static_cast<std::size_t>(config.components);
        SweepOptions sweep_opts{rolling, config.drop_first_window};
        const SweepResult result = sweep(series, summary.window, components, sweep_opts);
        summary.windows = result.window_count();

        {
            std::ostringstream m;
            m << "series_length=" << series.length() << '\n'
              << "variables=" << series.width() << '\n'
              << "returns_kind=" << to_string(config.returns_kind) << '\n'
              << "window=" << summary.window << '\n'
              << "window_source=" << (config.window ? "explicit" : "kmo_search") << '\n'
              << "drop_first_window=" << (config.drop_first_window ? "true" : "false") << '\n'
              << "windows=" << result.window_count() << '\n'
              << "singular_windows="
              << std::count(result.valid.begin(), result.valid.end(), std::uint8_t{0}) << '\n'
              << "components=" << components << '\n'
              << "first_timestamp=" << series.timestamps.front() << '\n'
              << "last_timestamp=" << series.timestamps.back() << '\n';
            for (std::size_t i = 0; i < filtered.dropped.size(); ++i)
                m << "dropped." << i << '=' << filtered.dropped[i] << '\n';
            if (summary.search) {
                m << "kmo_threshold=" << format_double(summary.search->threshold) << '\n';
                for (const auto& c : summary.search->candidates)
                    m << "kmo_search." << c.window << '='
                      << (c.min_kmo ? format_double(*c.min_kmo) : std::string("not_estimable"))
                      << (c.not_estimable ? " (" + std::to_string(c.not_estimable) + " not estimable)" : "")
                      << '\n';
            }
            detail::write_text(root / "manifest.txt", m.str());
        }

        // Retention rules on the full-period correlation matrix.
        const EigenDecomposition full = decompose(correlation(series, 0, series.length()));
        const RetentionReport report =
            retention_report(full.values, config.cumulative_thresholds, config.kaiser_cutoffs);
        detail::write_text(root / "retention.txt", to_key_value(report));
        export_scree(report, (root / "scree.csv").string(), (root / "log_scree.csv").string());

        save_sweep(result, root / "sweep");
        for (const char* d : {"heatmaps", "tracks", "angles"}) fs::create_directories(root / d);
        const std::size_t marker = detail::resolve_marker(config, series.labels);
        for (std::size_t j = 0; j < components; ++j) {
            const std::string stem = detail::component_stem(j);
            const CoefficientTrack track = coefficient_track(result, j, config.order_basis);
            HeatmapSpec spec;
            spec.value_clip = config.value_clip ? *config.value_clip : default_clip(track);
            spec.cell_width = static_cast<std::size_t>(config.cell_width);
            spec.cell_height = static_cast<std::size_t>(config.cell_height);
            render_heatmap(track, spec, (root / "heatmaps" / (stem + ".ppm")).string());
            export_track_csv(track, (root / "tracks" / (stem + ".csv")).string());
            export_angle_plot(angle_series(result, j, marker), (root / "angles" / (stem + ".csv")).string());
        }

        log << "window=" << summary.window << '\n' << "windows=" << summary.windows << '\n';
        log << "finished_at=" << detail::utc_now() << '\n' << "status=ok\n";
        detail::write_text(root / "run.log", log.str());
    } catch (const std::exception& e) {
        log << "finished_at=" << detail::utc_now() << '\n' << "status=failed\nerror=" << e.what() << '\n';
        try {
            detail::write_text(root / "run.log", log.str());
            detail::write_text(root / "INCOMPLETE", std::string(e.what()) + '\n');
        } catch (...) {
        }
        throw;
    }
    return summary;
}

}  // namespace pcdrift
