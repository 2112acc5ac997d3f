#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace mpal::lab {

class TomlError : public std::runtime_error {
 public:
  TomlError(std::size_t line, const std::string& what)
      : std::runtime_error("TOML line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses the TOML subset used by experiment configs into JSON: tables, dotted keys,
/// strings, integers, floats, booleans, arrays and inline tables. Dates and arrays of
/// tables are rejected.
nlohmann::json parse_toml(std::string_view text);

}  // namespace mpal::lab
