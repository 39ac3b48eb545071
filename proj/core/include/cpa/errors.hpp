#pragma once

#include <stdexcept>
#include <string>

namespace cpa {

// Base for every error raised by the library. Callers that only care about
// "something went wrong in the simulator" catch this one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, geometry or configuration (violated preconditions).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A query reached past the explicit time horizon of an event environment.
class HorizonExceeded : public Error {
 public:
  using Error::Error;
};

// Initial support or a requested site lies outside the simulation region.
class RegionError : public Error {
 public:
  using Error::Error;
};

// The occupied set touched the confinement box of an "infinite lattice" run.
class BoundaryHit : public Error {
 public:
  using Error::Error;
};

// Exact solver asked to enumerate more states than it is allowed to.
class StateSpaceOverflow : public Error {
 public:
  using Error::Error;
};

// An estimator did not collect enough events to produce its statistic.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace cpa
