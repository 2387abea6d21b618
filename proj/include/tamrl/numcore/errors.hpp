#pragma once

#include <stdexcept>
#include <string>

namespace tamrl {

/// Two operands disagree on shape, or a cache does not match its params.
class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// NaN/Inf produced or consumed where finite values are required.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (CSV contents, timestamps, window requests).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad experiment configuration: unknown key, unparseable value.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace tamrl
