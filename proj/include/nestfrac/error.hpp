#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nestfrac {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The IFS does not define a usable nested fractal (too few maps or essential fixed points).
class DegenerateSystem : public Error {
 public:
  using Error::Error;
};

/// A point sits on the vertex lattice, so it has no unique containing simplex.
class AmbiguousAddress : public Error {
 public:
  using Error::Error;
};

/// A point lies farther than the tolerance from the attractor.
class OutsideAttractor : public Error {
 public:
  using Error::Error;
};

/// Requested level is beyond the configured working depth.
class DepthExceeded : public Error {
 public:
  using Error::Error;
};

/// Two addresses could not be separated before the working depth ran out.
class Indistinguishable : public Error {
 public:
  using Error::Error;
};

/// Interior block of a network is singular, or the result is not a conductivity matrix.
class DegenerateNetwork : public Error {
 public:
  using Error::Error;
};

class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, std::vector<double> history)
      : Error(what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

/// The renormalization eigenvalue does not describe a resistance fractal (rho <= 1).
class NotResistanceFractal : public Error {
 public:
  using Error::Error;
};

class DegenerateStructure : public Error {
 public:
  using Error::Error;
};

/// A cell map is singular or too ill-conditioned to invert.
class DegenerateCellMap : public Error {
 public:
  DegenerateCellMap(const std::string& what, double cond)
      : Error(what), condition_number(cond) {}
  double condition_number;
};

/// Bad argument: mismatched sizes, wrong level, invalid word and the like.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace nestfrac
