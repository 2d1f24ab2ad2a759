#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace vdcal {

/// A problem with one input line; line numbers are 1-based file lines.
struct RowError {
  std::size_t line = 0;
  std::string message;
};

/// Rows that parsed plus the per-line errors for those that did not.
template <typename T>
struct Parsed {
  std::vector<T> rows;
  std::vector<RowError> errors;
};

namespace csv {

/// Splits one line on commas. No quoting: none of the formats here need it.
std::vector<std::string_view> split(std::string_view line);

std::string_view trim(std::string_view s);

/// Yields trimmed non-blank lines, skipping the first one when it equals
/// `header`.
class LineReader {
 public:
  LineReader(std::istream& in, std::string_view header);

  /// Next data line; returns false at end of input.
  bool next(std::string_view& line);
  std::size_t line_number() const { return line_no_; }

 private:
  std::istream& in_;
  std::string header_;
  std::string buffer_;
  std::size_t line_no_ = 0;
  bool first_ = true;
};

double to_double(std::string_view field, std::string_view name);
std::int64_t to_int(std::string_view field, std::string_view name);

/// Shortest round-trip decimal representation.
std::string format_number(double v);

}  // namespace csv
}  // namespace vdcal
