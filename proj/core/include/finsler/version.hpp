#pragma once

namespace finsler {
inline constexpr const char* kVersion = "0.1.0";
}
