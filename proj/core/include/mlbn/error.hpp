#pragma once

#include <stdexcept>
#include <string>

namespace mlbn {

// Malformed or inconsistent input data (files, sample tables, graph specs).
class data_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Parse failure with a 1-based line number when one is known (0 otherwise).
class parse_error : public data_error {
public:
  parse_error(const std::string& what, std::size_t line)
      : data_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// An estimator refused to produce a value (degenerate data, empty mixture, ...).
class estimation_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace mlbn
