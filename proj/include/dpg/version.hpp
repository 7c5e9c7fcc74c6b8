#pragma once

namespace dpg {
inline constexpr const char* version = "0.1.0";
}
