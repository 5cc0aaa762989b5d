#pragma once

namespace cbi {
inline constexpr const char* kVersion = "1.0.0";
}
