#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evqr {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument violates an operation's precondition (bandwidth, level, weights...).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Function evaluated outside its domain (K_z at u <= 0, order outside (0,1)).
class DomainError : public Error {
public:
  using Error::Error;
};

/// No observation carries positive kernel weight at the query point.
class EmptyWindowError : public Error {
public:
  using Error::Error;
};

/// Two consecutive quantiles used by the refined Pickands estimator coincide.
class DegenerateSpacingError : public Error {
public:
  DegenerateSpacingError(std::size_t spacing, const std::string& what)
      : Error(what), spacing_(spacing) {}

  /// 0-based index j of the collapsed spacing q(tau_j a) - q(tau_{j+1} a).
  std::size_t spacing() const noexcept { return spacing_; }

private:
  std::size_t spacing_;
};

/// Not enough data to carry out a fit (window too small, too few exceedances).
class InsufficientDataError : public Error {
public:
  using Error::Error;
};

/// A parameter-selection rule had no admissible candidate.
class SelectionError : public Error {
public:
  using Error::Error;
};

}  // namespace evqr
