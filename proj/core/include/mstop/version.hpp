#pragma once

namespace mstop {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mstop
