#pragma once

#include <stdexcept>
#include <string>

namespace zzi {

enum class ErrorKind {
  Syntax,
  Validation,
  Io,
  DegenerateReduction,
  StampSingularity,
  PoleProximity,
  Extrapolation,
  NoBracket,
  NotConverged,
  Degenerate,
  Labeling,
  SingularMass,
  ZeroMode,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, int line = 0)
      : std::runtime_error(what), kind_(kind), line_(line) {}

  ErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  // input errors map to exit code 2, everything else is a physics failure
  bool is_input() const;

 private:
  ErrorKind kind_;
  int line_;
};

}  // namespace zzi
