#pragma once

#include <stdexcept>
#include <string>

namespace fairrank {

// Base error for all library failures. Carries the module that raised it so
// the CLI can print "[module] message" and map the type to an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string message)
      : std::runtime_error("[" + module + "] " + message),
        module_(std::move(module)),
        message_(std::move(message)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string module_;
  std::string message_;
};

// Invalid input data, configuration, or violated preconditions. Exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// File system / serialization failure. Exit code 1.
class IoError : public Error {
 public:
  using Error::Error;
};

// A path-specific effect cannot be computed from data (recanting witness).
// Exit code 2.
class UnidentifiableError : public Error {
 public:
  using Error::Error;
};

// An iterative numeric routine failed to converge within its cap. Exit code 3.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairrank
