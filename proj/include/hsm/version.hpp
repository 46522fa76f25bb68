#pragma once

namespace hsm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hsm
