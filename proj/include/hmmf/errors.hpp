// Error types shared by all components of the library.

#ifndef HMMF_ERRORS_HPP
#define HMMF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hmmf {

/// Base class of all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Degenerate or inconsistent geometry (zero-size domain, non-star-shaped cell, ...).
struct InvalidGeometryError : Error {
  using Error::Error;
};

/// Malformed mesh or config file; carries the offending line number.
struct ParseError : Error {
  int line;
  ParseError(int line_, const std::string& what_)
      : Error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

/// Cell whose co-normal matrix is numerically rank deficient.
struct IllConditionedCellError : Error {
  using Error::Error;
};

/// Invalid user-supplied parameter (non-SPD stabilization, bad preset data, ...).
struct ParameterError : Error {
  using Error::Error;
};

/// Violation of an algebraic identity that should hold on any valid cell.
struct InternalConsistencyError : Error {
  using Error::Error;
};

/// No admissible barycentric cell set for a condensed edge.
struct CondensationError : Error {
  using Error::Error;
};

/// Matrix handed to the SPD solver is visibly not SPD.
struct NotSpdError : Error {
  using Error::Error;
};

/// Iterative solver exhausted its iteration budget.
struct NonConvergenceError : Error {
  double residual;
  int iterations;
  NonConvergenceError(double res, int iters)
      : Error("solver did not converge: relative residual " + std::to_string(res) + " after " +
              std::to_string(iters) + " iterations"),
        residual(res), iterations(iters) {}
};

/// Invalid run configuration (unknown key, missing file, ...).
struct ConfigError : Error {
  using Error::Error;
};

/// Query point outside the domain of a reconstruction.
struct DomainError : Error {
  using Error::Error;
};

/// Ill-formed convergence study input (too few meshes, non-monotone sizes).
struct ReportError : Error {
  using Error::Error;
};

}  // namespace hmmf

#endif
