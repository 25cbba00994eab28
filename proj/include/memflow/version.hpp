#pragma once

namespace memflow {

inline constexpr const char* version = "0.1.0";

} // namespace memflow
