#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sharecast {

// Bad argument to a pure computation (negative time, p <= 0, inverted interval, ...).
class invalid_argument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A time outside the observation window of a schedule.
class out_of_window : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Not enough observed reshares to estimate infectiousness.
class insufficient_data : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& source, std::size_t line, const std::string& message)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace sharecast
