#include "emcloud/time.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace emcloud {

Duration parse_duration(std::string_view text) {
  auto bad = [&] { return std::invalid_argument("cannot parse duration '" + std::string(text) + "'"); };
  if (text.starts_with("t0+")) text.remove_prefix(3);
  if (text == "t0") return Duration{0};
  if (text.empty()) throw bad();

  // Bare integers are milliseconds.
  if (std::all_of(text.begin(), text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    long long v = 0;
    auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc{}) throw bad();
    return Duration{v};
  }

  if (auto colon = text.find(':'); colon != std::string_view::npos) {
    long long mm = 0, ss = 0;
    auto a = std::from_chars(text.data(), text.data() + colon, mm);
    auto b = std::from_chars(text.data() + colon + 1, text.data() + text.size(), ss);
    if (a.ec != std::errc{} || a.ptr != text.data() + colon || b.ec != std::errc{} ||
        b.ptr != text.data() + text.size() || ss >= 60 || mm < 0 || ss < 0) {
      throw bad();
    }
    return Duration{(mm * 60 + ss) * 1000};
  }

  long long total = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.')) ++j;
    if (j == i) throw bad();
    double number = 0.0;
    auto r = std::from_chars(text.data() + i, text.data() + j, number);
    if (r.ec != std::errc{}) throw bad();
    std::size_t k = j;
    while (k < text.size() && std::isalpha(static_cast<unsigned char>(text[k]))) ++k;
    const std::string_view unit = text.substr(j, k - j);
    double scale = 0.0;
    if (unit == "ms") scale = 1.0;
    else if (unit == "s") scale = 1000.0;
    else if (unit == "m" || unit == "min") scale = 60000.0;
    else if (unit == "h") scale = 3600000.0;
    else throw bad();
    const double ms = number * scale;
    if (ms != std::floor(ms)) throw bad();
    total += static_cast<long long>(ms);
    i = k;
  }
  return Duration{total};
}

}  // namespace emcloud
