#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

namespace omech {

/// Failure categories. The CLI maps each one onto a stable exit code.
enum class ErrorKind { Validation, Numerical, Io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad input: contract preconditions, dimension mismatches, malformed config.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

/// The computation itself broke down (CFL guard, non-finite amplitudes, non-PSD input).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// Receives non-fatal diagnostics. Defaults to stderr; the CLI redirects it into the run report.
inline std::function<void(const std::string&)>& warning_sink() {
  static std::function<void(const std::string&)> sink = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  return sink;
}

inline void warn(const std::string& message) {
  if (warning_sink()) warning_sink()(message);
}

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}
}  // namespace detail

}  // namespace omech
