#pragma once

#include <stdexcept>
#include <string>

namespace cocycle {

// Error categories map onto CLI exit codes: 1 config, 2 numeric, 3 resonance.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class ResonanceError : public std::runtime_error {
 public:
  explicit ResonanceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cocycle
