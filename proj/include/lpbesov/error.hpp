#pragma once

#include <stdexcept>
#include <string>

namespace lpbesov {

// Invalid input or configuration: bad files, out-of-range parameters,
// dimension mismatches. The CLI maps these to exit status 2.
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

class ParseError : public ConfigError {
public:
  explicit ParseError(const std::string& what) : ConfigError(what) {}
};

// A computation that could not be completed (solver failure, non-finite
// values). The CLI maps these to exit status 3.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lpbesov
