#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tamed {

/// Base class of every error raised by the library. Messages are prefixed
/// with the originating module, e.g. "montecarlo: ...".
class Error : public std::runtime_error {
 public:
  Error(const std::string& module, const std::string& what)
      : std::runtime_error(module + ": " + what) {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The drift returned a non-finite value at a finite input.
class DriftOverflow : public Error {
 public:
  DriftOverflow(std::vector<double> x, const std::string& what)
      : Error("model", what), point_(std::move(x)) {}
  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::vector<double> point_;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

class NotGradientProblem : public Error {
 public:
  using Error::Error;
};

class GridTooNarrow : public Error {
 public:
  using Error::Error;
};

class AllPathsExploded : public Error {
 public:
  using Error::Error;
};

class SlopeUndetermined : public Error {
 public:
  using Error::Error;
};

/// No reference value can be produced for the requested problem/observable.
class OracleUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace tamed
