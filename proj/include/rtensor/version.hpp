#pragma once

namespace rtensor {

inline constexpr const char* kVersion = "0.1.0";

} // namespace rtensor
