#pragma once

namespace dcnb {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kTraceFormat = "DCNBTRC1";

}  // namespace dcnb
