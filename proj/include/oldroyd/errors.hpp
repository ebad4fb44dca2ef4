#pragma once

#include <stdexcept>
#include <string>

namespace oldroyd {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An argument left the mathematical domain of an operation
/// (e.g. a matrix that is required to be SPD is not).
struct DomainError : Error {
  using Error::Error;
};

/// A matrix exponential would overflow in double precision.
struct OverflowError : Error {
  using Error::Error;
};

struct MeshError : Error {
  using Error::Error;
};

/// A point could not be located inside the mesh.
struct LocationError : Error {
  using Error::Error;
};

/// A characteristic foot left the domain beyond the clamping tolerance.
struct TransportError : Error {
  using Error::Error;
};

/// An interface contract was violated by the caller
/// (e.g. a multivalued normal trace where a single-valued one is required).
struct ContractViolation : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct LinearSolverError : Error {
  using Error::Error;
};

/// The per-step fixed point did not reach its tolerance. Expected for the
/// conformation formulation when the time step exceeds the scheme limit.
struct NonConvergenceError : Error {
  NonConvergenceError(const std::string& msg, int iterations, double last_update)
      : Error(msg), iterations(iterations), last_update(last_update) {}
  int iterations;
  double last_update;
};

/// The stress field lost positive definiteness. A scheme-limit signal for the
/// conformation formulation, a bug anywhere else.
struct PositivityError : Error {
  PositivityError(const std::string& msg, int element, double min_eigenvalue)
      : Error(msg), element(element), min_eigenvalue(min_eigenvalue) {}
  int element;
  double min_eigenvalue;
};

/// (I - dt*G) became (near-)singular in the Lie update.
struct StepSizeError : Error {
  using Error::Error;
};

}  // namespace oldroyd
