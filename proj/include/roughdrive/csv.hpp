#pragma once

#include <string>
#include <string_view>

namespace roughdrive::csv {

/// First line of every CSV artifact.
inline constexpr std::string_view kVersionLine = "# roughdrive-csv v1";

/// Shortest round-trip decimal form of a double; deterministic across runs.
std::string format_double(double v);

}  // namespace roughdrive::csv
