#include "vdcal/csv.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "vdcal/types.hpp"

namespace vdcal::csv {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

LineReader::LineReader(std::istream& in, std::string_view header) : in_(in), header_(header) {}

bool LineReader::next(std::string_view& line) {
  while (std::getline(in_, buffer_)) {
    ++line_no_;
    const auto view = trim(buffer_);
    if (view.empty()) continue;
    if (first_) {
      first_ = false;
      if (view == header_) continue;
    }
    line = view;
    return true;
  }
  return false;
}

double to_double(std::string_view field, std::string_view name) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw ParseError(fmt::format("field '{}': not a number: '{}'", name, field));
  }
  return value;
}

std::int64_t to_int(std::string_view field, std::string_view name) {
  std::int64_t value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError(fmt::format("field '{}': not an integer: '{}'", name, field));
  }
  return value;
}

std::string format_number(double v) { return fmt::format("{}", v); }

}  // namespace vdcal::csv
