#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace paraling {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Strict parse of the whole string; throws Error(InvalidArgument) naming `where`.
double parse_double(std::string_view s, const std::string& where);
long long parse_int(std::string_view s, const std::string& where);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

}  // namespace paraling
