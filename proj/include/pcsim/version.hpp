#pragma once

namespace pcsim {

inline constexpr const char* kToolName = "pcsim";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace pcsim
