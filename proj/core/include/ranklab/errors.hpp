#pragma once

#include <stdexcept>
#include <string>

namespace ranklab {

/// Invalid configuration value; `key()` names the offending setting.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key))
  {
  }
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// A parameter became NaN or infinite during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ranklab
