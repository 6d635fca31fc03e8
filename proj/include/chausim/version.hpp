#pragma once

namespace chausim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace chausim
