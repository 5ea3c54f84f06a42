#pragma once

namespace qicloak {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qicloak
