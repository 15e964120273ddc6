#pragma once

namespace ottosim {

inline constexpr const char* tool_name = "ottosim";
inline constexpr const char* tool_version = "0.1.0";

} // namespace ottosim
