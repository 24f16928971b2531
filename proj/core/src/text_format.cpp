#include "crowdnav/text_format.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <istream>

#include "crowdnav/errors.hpp"

namespace crowdnav {

std::string format_double(double value) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string checksum_hex(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::vector<std::string> split_tokens(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> split_delimited(std::string_view line, char delimiter) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<std::string> LineReader::next() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  ++line_;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::optional<std::string> LineReader::next_nonempty() {
  while (auto line = next()) {
    if (line->find_first_not_of(" \t") != std::string::npos) return line;
  }
  return std::nullopt;
}

std::string LineReader::expect_line(const std::string& what) {
  auto line = next();
  if (!line) {
    throw ParseError(source_, line_ + 1, "unexpected end of file, expected " + what);
  }
  return *line;
}

std::vector<std::string> LineReader::expect_tokens(const std::string& what) {
  return split_tokens(expect_line(what));
}

void LineReader::fail(const std::string& message) const { throw ParseError(source_, line_, message); }

double LineReader::parse_double(const std::string& token) const {
  if (token.empty()) fail("empty numeric field");
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) fail("'" + token + "' is not a number");
  return value;
}

std::int64_t LineReader::parse_i64(const std::string& token) const {
  if (token.empty()) fail("empty integer field");
  char* end = nullptr;
  errno = 0;
  const long long value = std::strtoll(token.c_str(), &end, 10);
  if (end != token.c_str() + token.size() || errno == ERANGE) fail("'" + token + "' is not an integer");
  return value;
}

std::uint64_t LineReader::parse_u64(const std::string& token) const {
  if (token.empty() || token[0] == '-') fail("'" + token + "' is not a non-negative integer");
  char* end = nullptr;
  errno = 0;
  const unsigned long long value = std::strtoull(token.c_str(), &end, 10);
  if (end != token.c_str() + token.size() || errno == ERANGE) fail("'" + token + "' is not a non-negative integer");
  return value;
}

}  // namespace crowdnav
