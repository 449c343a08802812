#pragma once

namespace eventimpact {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace eventimpact
