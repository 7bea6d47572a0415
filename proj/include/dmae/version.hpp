#pragma once

namespace dmae {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dmae
