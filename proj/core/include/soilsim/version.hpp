#pragma once

namespace soilsim {

inline constexpr const char* kVersion = "0.1.0";

} // namespace soilsim
