#pragma once

/**
 * @file render.hpp
 * @brief Heat maps of coefficient tracks (binary PPM) and plot-ready CSV
 *        exports for angle series and scree diagrams.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pcdrift/error.hpp"
#include "pcdrift/evolution.hpp"
#include "pcdrift/retention.hpp"
#include "pcdrift/text.hpp"

namespace pcdrift {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Red (negative) through orange (zero) to yellow (positive). Colors for v
/// and -v are exact reflections about the midpoint, channel by channel.
struct DivergingColormap {
    static constexpr std::array<int, 3> midpoint{220, 128, 32};
    static constexpr std::array<int, 3> half_span{35, 112, 0};
    static constexpr Rgb gap{128, 128, 128};

    double clip = 1.0;

    [[nodiscard]] Rgb operator()(double v) const {
        if (std::isnan(v)) return gap;
        const double t = std::clamp(v / clip, -1.0, 1.0);
        Rgb c;
        std::array<std::uint8_t*, 3> ch{&c.r, &c.g, &c.b};
        for (std::size_t i = 0; i < 3; ++i)
            *ch[i] = static_cast<std::uint8_t>(midpoint[i] + std::lround(t * half_span[i]));
        return c;
    }

    [[nodiscard]] static Rgb midpoint_color() {
        return {static_cast<std::uint8_t>(midpoint[0]), static_cast<std::uint8_t>(midpoint[1]),
                static_cast<std::uint8_t>(midpoint[2])};
    }
};

struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;  ///< row-major, 3 bytes per pixel

    [[nodiscard]] Rgb at(std::size_t x, std::size_t y) const {
        const std::size_t o = 3 * (y * width + x);
        return {rgb[o], rgb[o + 1], rgb[o + 2]};
    }
};

struct HeatmapSpec {
    double value_clip = 1.0;
    std::size_t cell_width = 1;
    std::size_t cell_height = 1;
};

/// 99th percentile of |loading| over the finite entries of a track (linear
/// interpolation between order statistics). Falls back to 1 when that is 0.
inline double default_clip(const CoefficientTrack& t) {
    std::vector<double> mags;
    mags.reserve(t.matrix.values().size());
    for (double v : t.matrix.values())
        if (std::isfinite(v)) mags.push_back(std::abs(v));
    if (mags.empty()) return 1.0;
    std::sort(mags.begin(), mags.end());
    const double pos = 0.99 * static_cast<double>(mags.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, mags.size() - 1);
    const double q = mags[lo] + (pos - static_cast<double>(lo)) * (mags[hi] - mags[lo]);
    return q > 0.0 ? q : 1.0;
}

/// One cell per (window, variable): windows run left to right, variables top
/// to bottom in the track's display order.
inline Image heatmap_image(const CoefficientTrack& t, const HeatmapSpec& spec) {
    if (!(spec.value_clip > 0.0)) throw std::invalid_argument("value_clip must be > 0");
    if (spec.cell_width == 0 || spec.cell_height == 0) throw std::invalid_argument("cell size must be >= 1");
    const std::size_t w_count = t.matrix.rows();
    const std::size_t n = t.matrix.cols();
    const DivergingColormap cmap{spec.value_clip};

    Image img;
    img.width = w_count * spec.cell_width;
    img.height = n * spec.cell_height;
    img.rgb.resize(3 * img.width * img.height);
    for (std::size_t y = 0; y < img.height; ++y) {
        const std::size_t var = y / spec.cell_height;
        for (std::size_t x = 0; x < img.width; ++x) {
            const std::size_t w = x / spec.cell_width;
            const double v = t.valid.empty() || t.valid[w] ? t.matrix(w, var) : std::nan("");
            const Rgb c = cmap(v);
            const std::size_t o = 3 * (y * img.width + x);
            img.rgb[o] = c.r;
            img.rgb[o + 1] = c.g;
            img.rgb[o + 2] = c.b;
        }
    }
    return img;
}

inline void write_ppm(const Image& img, const std::string& path) {
    auto out = open_output(path);
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
    finish_output(out, path);
}

/// Writes the PPM to `path` and a text sidecar to `path + ".txt"` holding
/// the dimensions, clip value and row order.
inline Image render_heatmap(const CoefficientTrack& t, const HeatmapSpec& spec, const std::string& path) {
    Image img = heatmap_image(t, spec);
    write_ppm(img, path);

    const std::string side = path + ".txt";
    auto out = open_output(side);
    out << "component=" << t.component + 1 << '\n'
        << "width=" << img.width << '\n'
        << "height=" << img.height << '\n'
        << "windows=" << t.matrix.rows() << '\n'
        << "variables=" << t.matrix.cols() << '\n'
        << "cell_width=" << spec.cell_width << '\n'
        << "cell_height=" << spec.cell_height << '\n'
        << "value_clip=" << format_double(spec.value_clip) << '\n'
        << "order_basis=" << to_string(t.basis) << '\n';
    if (t.basis == OrderBasis::midpoint_sort) out << "sort_window=" << t.sort_window << '\n';
    out << "row_order=";
    for (std::size_t c = 0; c < t.row_order.size(); ++c) out << (c ? "," : "") << t.row_order[c];
    out << '\n' << "row_labels=";
    for (std::size_t c = 0; c < t.labels.size(); ++c) out << (c ? "," : "") << t.labels[c];
    out << '\n';
    finish_output(out, side);
    return img;
}

/// CSV with one row per window. Gap windows have empty value cells. A marker
/// loading <= 0 is classed `nonpositive`.
inline void export_angle_plot(const AngleSeries& a, const std::string& path) {
    auto out = open_output(path);
    out << "window,angle_raw_rad,angle_aligned_rad,flip_flag,marker_value,marker_sign_class\n";
    for (std::size_t w = 0; w < a.size(); ++w) {
        const bool gap = std::isnan(a.angles_raw[w]);
        out << w << ',' << format_double(a.angles_raw[w]) << ',' << format_double(a.angles_aligned[w]) << ',';
        if (!gap) out << static_cast<int>(a.flip_flags[w]);
        const double m = a.marker_values.empty() ? std::nan("") : a.marker_values[w];
        out << ',' << format_double(m) << ',';
        if (!std::isnan(m)) out << (m <= 0.0 ? "nonpositive" : "positive");
        out << '\n';
    }
    finish_output(out, path);
}

/// Two CSVs with columns `k,value`. The log file starts with a comment line
/// giving how many eigenvalues were too small to take a logarithm of.
inline void export_scree(const ScreeData& d, const std::string& scree_path, const std::string& log_path) {
    {
        auto out = open_output(scree_path);
        out << "k,value\n";
        for (const auto& p : d.scree) out << p.k << ',' << format_double(p.value) << '\n';
        finish_output(out, scree_path);
    }
    auto out = open_output(log_path);
    out << "# omitted_nonpositive=" << d.log_omitted << '\n' << "k,value\n";
    for (const auto& p : d.log_scree) out << p.k << ',' << format_double(p.value) << '\n';
    finish_output(out, log_path);
}

inline void export_scree(const RetentionReport& rep, const std::string& scree_path, const std::string& log_path) {
    export_scree(rep.scree, scree_path, log_path);
}

}  // namespace pcdrift
