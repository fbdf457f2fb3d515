#pragma once

#include <stdexcept>
#include <string>

#include "ablmesh/geometry.hpp"

namespace ablmesh {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-facing parameter (non-positive size, bad ratio, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Query point outside the parametric domain of a terrain.
class OutOfDomainError : public Error {
 public:
  OutOfDomainError(const std::string& what, Vec2 query, Vec2 closest)
      : Error(what), query_(query), closest_(closest) {}

  Vec2 query() const { return query_; }
  /// Closest point on the domain boundary.
  Vec2 closest_boundary_point() const { return closest_; }

 private:
  Vec2 query_;
  Vec2 closest_;
};

/// Least-squares fit could not be made well-posed.
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Parse failure with the 1-based line number where it occurred.
class ParseError : public InputError {
 public:
  ParseError(const std::string& path, int line, const std::string& msg)
      : InputError(path + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Meshing algorithm could not complete (cycle cap, inverted prism, ...).
class MeshingError : public Error {
 public:
  using Error::Error;
};

}  // namespace ablmesh
