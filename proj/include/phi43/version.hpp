#pragma once

namespace phi43 {

inline constexpr const char* kCodeVersion = "0.1.0";
/// Bumped whenever a results table changes columns or meaning.
inline constexpr int kSchemaVersion = 1;

}  // namespace phi43
