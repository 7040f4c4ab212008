#pragma once

#include <stdexcept>
#include <string>

namespace mfrbp {

/// Base error for everything thrown by the library. Messages carry enough
/// context (agent, level, line number, path) to be actionable on their own.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mfrbp
