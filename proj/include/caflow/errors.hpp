#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace caflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid grid request (unsupported dimension, resolution, broken antipodal symmetry).
class GridError : public Error {
 public:
  using Error::Error;
};

/// Support function is not that of a strictly convex body containing the origin.
/// `node` is the offending grid node, or npos when the failure is global.
class ConvexityError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  ConvexityError(const std::string& what, std::size_t node = npos, double suggested_dt = 0.0)
      : Error(what), node_(node), suggested_dt_(suggested_dt) {}

  std::size_t node() const { return node_; }
  /// Nonzero when raised from a time step: a smaller step that may succeed.
  double suggested_dt() const { return suggested_dt_; }

 private:
  std::size_t node_;
  double suggested_dt_;
};

/// Requested time step exceeds the explicit stability bound.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double bound) : Error(what), bound_(bound) {}
  double bound() const { return bound_; }

 private:
  double bound_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Malformed input file; `location` names the line or field.
class ParseError : public Error {
 public:
  ParseError(const std::string& location, const std::string& what)
      : Error(location + ": " + what), location_(location) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

}  // namespace caflow
