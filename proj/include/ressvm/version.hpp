#pragma once

#include <string_view>

namespace ressvm {

inline constexpr std::string_view kToolName = "ressvm";
inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace ressvm
