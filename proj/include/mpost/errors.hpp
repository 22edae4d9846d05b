#pragma once

#include <stdexcept>
#include <string>

namespace mpost {

/// Invalid arguments, malformed inputs or configuration. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical routine could not complete (failed Cholesky, non-finite values). Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mpost
