#pragma once

namespace simplerc {

inline constexpr const char* kVersion = "0.3.0";

}  // namespace simplerc
