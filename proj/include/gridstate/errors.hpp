#pragma once

#include <stdexcept>
#include <string>

namespace gridstate {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid input data: malformed files, unknown ids, inconsistent dimensions,
/// bad configuration. Maps to CLI exit code 2.
class InputError : public Error {
  public:
    explicit InputError(const std::string& what) : Error(what) {}
};

/// Numerical failure: non-convergence, singular systems, covariance
/// inconsistencies. Maps to CLI exit code 1.
class NumericalError : public Error {
  public:
    explicit NumericalError(const std::string& what) : Error(what) {}
};

/// The estimation system does not determine a unique state (the saddle-point
/// matrix is singular or numerically rank-deficient).
class NonIdentifiableError : public NumericalError {
  public:
    NonIdentifiableError(const std::string& what, double rcond_estimate)
        : NumericalError(what), rcond(rcond_estimate) {}

    double rcond;
};

}  // namespace gridstate
