#pragma once

namespace ilms {
inline constexpr char const* kVersion = "0.1.0";
}
