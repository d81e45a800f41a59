#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "oracles.hpp"
#include "pcdrift/correlation_matrix.hpp"
#include "pcdrift/ingest.hpp"
#include "pcdrift/matrix.hpp"

namespace testing_support {

inline oracle::Mat to_mat(const pcdrift::Matrix& m) {
    oracle::Mat out = oracle::zeros(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    return out;
}

inline pcdrift::Matrix from_mat(const oracle::Mat& m) {
    pcdrift::Matrix out(m.size(), m.front().size());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[i].size(); ++j) out(i, j) = m[i][j];
    return out;
}

inline pcdrift::SeriesMatrix series_from(const oracle::Mat& x) {
    pcdrift::SeriesMatrix s;
    s.data = from_mat(x);
    for (std::size_t i = 0; i < s.width(); ++i) s.labels.push_back("X" + std::to_string(i + 1));
    for (std::size_t t = 0; t < s.length(); ++t) s.timestamps.push_back("t" + std::to_string(t));
    return s;
}

/// Random correlation matrix: sample correlation of random factor data.
inline pcdrift::CorrelationMatrix random_correlation(std::mt19937_64& rng, std::size_t n) {
    const auto x = oracle::random_data(rng, n + 5 + rng() % (3 * n + 10), n);
    auto r = oracle::pearson(x);
    for (std::size_t i = 0; i < n; ++i) {
        r[i][i] = 1.0;
        for (std::size_t j = 0; j < i; ++j) r[i][j] = r[j][i];
    }
    return pcdrift::CorrelationMatrix(from_mat(r));
}

inline oracle::Mat window_rows(const oracle::Mat& x, std::size_t start, std::size_t k) {
    return oracle::Mat(x.begin() + static_cast<std::ptrdiff_t>(start),
                       x.begin() + static_cast<std::ptrdiff_t>(start + k));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("pcdrift_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p.string();
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing_support
