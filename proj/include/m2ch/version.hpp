#pragma once

namespace m2ch {
inline constexpr const char* kVersion = "0.1.0";
}
