#include "paraling/text.hpp"

#include <charconv>
#include <cmath>

#include "paraling/error.hpp"

namespace paraling {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, const std::string& where) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  require(ec == std::errc() && end == t.data() + t.size() && !t.empty(),
          ErrorCode::InvalidArgument, where + ": not a number: '" + t + "'");
  return v;
}

long long parse_int(std::string_view s, const std::string& where) {
  const std::string t = trim(s);
  long long v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  require(ec == std::errc() && end == t.data() + t.size() && !t.empty(),
          ErrorCode::InvalidArgument, where + ": not an integer: '" + t + "'");
  return v;
}

std::string format_double(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace paraling
