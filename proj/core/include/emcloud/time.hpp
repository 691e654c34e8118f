#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace emcloud {

/// Simulated time: milliseconds since the scenario epoch t0.
using SimTime = std::chrono::milliseconds;
using Duration = std::chrono::milliseconds;

constexpr SimTime kEpoch{0};

inline double to_minutes(Duration d) {
  return std::chrono::duration<double, std::ratio<60>>(d).count();
}

/// Formats a t0-relative time as "t0+MM:SS" (hours fold into minutes).
std::string format_sim_time(SimTime t);

/// Parses a duration or t0-relative time: integer milliseconds, "30s",
/// "5m", "1m30s", "2h", "t0+7m" or "7:00". Throws std::invalid_argument.
Duration parse_duration(std::string_view text);

}  // namespace emcloud
