#pragma once

namespace rlsbias {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rlsbias
