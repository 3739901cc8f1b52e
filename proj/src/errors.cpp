#include "zzi/errors.hpp"

namespace zzi {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Syntax: return "syntax";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Io: return "io";
    case ErrorKind::DegenerateReduction: return "degenerate_reduction";
    case ErrorKind::StampSingularity: return "stamp_singularity";
    case ErrorKind::PoleProximity: return "pole_proximity";
    case ErrorKind::Extrapolation: return "extrapolation";
    case ErrorKind::NoBracket: return "no_bracket";
    case ErrorKind::NotConverged: return "not_converged";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Labeling: return "labeling";
    case ErrorKind::SingularMass: return "singular_mass";
    case ErrorKind::ZeroMode: return "zero_mode";
  }
  return "unknown";
}

bool Error::is_input() const {
  switch (kind_) {
    case ErrorKind::Syntax:
    case ErrorKind::Validation:
    case ErrorKind::Io:
    case ErrorKind::DegenerateReduction:
    case ErrorKind::Extrapolation:
      return true;
    default:
      return false;
  }
}

}  // namespace zzi
