#pragma once

namespace pcdrift {
inline constexpr const char* version = "0.1.0";
}
