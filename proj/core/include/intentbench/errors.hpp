#pragma once

#include <stdexcept>
#include <string>

namespace intentbench {

/// Invalid configuration or parameters. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. The CLI maps this to exit code 3.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss. The CLI maps this to exit code 4.
class DivergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace intentbench
