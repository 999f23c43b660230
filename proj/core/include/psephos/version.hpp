#pragma once

namespace psephos {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace psephos
