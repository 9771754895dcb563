#pragma once

namespace msenc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace msenc
