#pragma once

#include <stdexcept>
#include <string>

namespace dykcd {

// Dimension or layout mismatch in an input.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Input violates a parameter precondition (sign, range, mode).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A matrix that must have full column rank does not (relative to the
// rank threshold), or an all-zero input where a nonzero one is required.
struct RankError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Point outside the domain of a loss / divergence.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative inner solve stopped before meeting its tolerance.
// `achieved` carries the best residual/gap reached.
struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double achieved_)
      : std::runtime_error(what + " (achieved " + std::to_string(achieved_) + ")"),
        achieved(achieved_) {}
  double achieved;
};

// Certified reference solve could not reach the requested duality gap.
struct CertificationError : std::runtime_error {
  CertificationError(const std::string& what, double best_gap_)
      : std::runtime_error(what + " (best gap " + std::to_string(best_gap_) + ")"),
        best_gap(best_gap_) {}
  double best_gap;
};

// Malformed file or trace contents.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The two independent oracle routes disagree beyond tolerance.
struct OracleInconsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dykcd
