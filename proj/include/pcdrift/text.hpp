#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <system_error>

#include "pcdrift/error.hpp"

namespace pcdrift {

/// Shortest decimal text that reads back to the same double. NaN becomes
/// an empty string (the CSV missing-cell marker).
inline std::string format_double(double v) {
    if (std::isnan(v)) return {};
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Opens `path` for binary writing or throws DataError.
inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    return out;
}

inline void finish_output(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace pcdrift
