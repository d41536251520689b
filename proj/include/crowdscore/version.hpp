#pragma once

namespace crowdscore {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace crowdscore
