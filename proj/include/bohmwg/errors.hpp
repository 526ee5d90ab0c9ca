#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bohmwg {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the double-well level solver when fewer than two bound states exist.
class InsufficientLevels : public std::runtime_error {
 public:
  InsufficientLevels(const std::string& what, int levels_found)
      : std::runtime_error(what), levels_found_(levels_found) {}
  int levels_found() const noexcept { return levels_found_; }

 private:
  int levels_found_;
};

/// Root bracketing or convergence failure. Carries the scan that led to it.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, std::vector<std::string> trace = {})
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<std::string>& trace() const noexcept { return trace_; }

 private:
  std::vector<std::string> trace_;
};

/// Propagation stopped by an invariant monitor (norm drift, non-finite values).
class PropagationAbort : public std::runtime_error {
 public:
  PropagationAbort(const std::string& what, double time, std::size_t step)
      : std::runtime_error(what), time_(time), step_(step) {}
  double time() const noexcept { return time_; }
  std::size_t step() const noexcept { return step_; }

 private:
  double time_;
  std::size_t step_;
};

class ParseError : public std::runtime_error {
 public:
  /// Rendered as "source:line: detail", "line N: detail" or just the detail.
  ParseError(const std::string& detail, int line, const std::string& source = {})
      : std::runtime_error(format(detail, line, source)), detail_(detail), line_(line) {}
  int line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(const std::string& detail, int line, const std::string& source) {
    if (!source.empty()) return source + ":" + (line > 0 ? std::to_string(line) + ":" : "") + " " + detail;
    return line > 0 ? "line " + std::to_string(line) + ": " + detail : detail;
  }

  std::string detail_;
  int line_;
};

/// Non-fatal diagnostics. Operations append to it when a caller passes one.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

}  // namespace bohmwg
