#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crowdnav {

/// Shortest-safe decimal form: 17 significant digits, round-trips any double.
std::string format_double(double value);

/// FNV-1a 64-bit hash of `text` as 16 lowercase hex digits.
std::string checksum_hex(std::string_view text);

std::vector<std::string> split_tokens(std::string_view line);
std::vector<std::string> split_delimited(std::string_view line, char delimiter);

/// Line-oriented reader that tracks line numbers for diagnostics.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  /// Next line (without newline), or nullopt at end of input.
  std::optional<std::string> next();
  /// Next line that is not blank.
  std::optional<std::string> next_nonempty();
  std::string expect_line(const std::string& what);
  std::vector<std::string> expect_tokens(const std::string& what);

  [[noreturn]] void fail(const std::string& message) const;
  double parse_double(const std::string& token) const;
  std::int64_t parse_i64(const std::string& token) const;
  std::uint64_t parse_u64(const std::string& token) const;

  std::size_t line_number() const { return line_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

}  // namespace crowdnav
