#pragma once

#include <stdexcept>
#include <string>

namespace gaincert {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A region argument is unusable (origin outside box, hole too large, ...).
class InvalidRegionError : public Error {
 public:
  using Error::Error;
};

/// A simplex is numerically degenerate (affinely dependent vertices).
class DegenerateSimplexError : public Error {
 public:
  using Error::Error;
};

/// A query point lies outside the triangulated region.
class OutOfRegionError : public Error {
 public:
  using Error::Error;
};

/// A model failed its construction checks (f(0) != 0, bad Jacobian, ...).
class InvalidModelError : public Error {
 public:
  using Error::Error;
};

/// A derivative-bound oracle returned a negative or non-finite value.
class InvalidOracleError : public Error {
 public:
  using Error::Error;
};

/// An error-bound ingredient (beta, mu, c) is negative.
class InvalidBoundError : public Error {
 public:
  using Error::Error;
};

/// The requested analysis mode does not match the model (e.g. B != 0 in
/// CPA-only mode) or the mesh (hole radius mismatch).
class ModeMismatchError : public Error {
 public:
  using Error::Error;
};

/// The constraint set and decision layout are inconsistent.
class CompileError : public Error {
 public:
  using Error::Error;
};

/// Bad run configuration (unknown key, unparsable value, missing input).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gaincert
