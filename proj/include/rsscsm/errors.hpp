#pragma once

#include <stdexcept>
#include <string>

namespace rsscsm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Retraction could not produce a valid point (antipodal sphere input,
/// non-finite or non-positive-definite SPD result).
class DegenerateRetraction : public Error {
 public:
  using Error::Error;
};

/// Parallel transport between (nearly) antipodal sphere points.
class DegenerateTransport : public Error {
 public:
  using Error::Error;
};

/// Zero direction passed to a subgradient query at a nonsmooth point.
class AmbiguousDirection : public Error {
 public:
  using Error::Error;
};

/// The interval reduction procedure hit its iteration cap.
class LineSearchStall : public Error {
 public:
  LineSearchStall(const std::string& what, double lo, double hi)
      : Error(what), tau_lo(lo), tau_hi(hi) {}
  double tau_lo;
  double tau_hi;
};

/// A benchmark operation received no records or problems.
class EmptySuite : public Error {
 public:
  using Error::Error;
};

}  // namespace rsscsm
