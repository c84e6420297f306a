#pragma once

namespace qdamp {

inline constexpr const char* kToolName = "qdamp";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace qdamp
