#ifndef CAVSIM_ERRORS_HPP
#define CAVSIM_ERRORS_HPP

#include <stdexcept>

namespace cavsim {

/// Base class for all recoverable cavsim errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration / layout ingestion.
struct LayoutError : Error { using Error::Error; };
struct UnknownPath : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// Trajectory algebra.
struct SingularSystem : Error { using Error::Error; };
struct NonMonotoneNodes : Error { using Error::Error; };
struct IllConditioned : Error { using Error::Error; };
struct OutOfDomain : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct NotMonotone : Error { using Error::Error; };

}  // namespace cavsim

#endif  // CAVSIM_ERRORS_HPP
