#pragma once

namespace soe {

inline constexpr const char* kVersion = "soe 0.1.0";

} // namespace soe
