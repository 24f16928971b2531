#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crowdnav {

/// Invalid or inconsistent configuration. `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line` is 1-based; 0 when not attributable to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& message)
      : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string{}) + ": " + message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A caller broke a documented precondition (e.g. relabeling a successful episode).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Scenario generation could not place agents without overlap.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crowdnav
