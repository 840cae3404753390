#pragma once

#include <stdexcept>
#include <string>

namespace frontier {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad argument for a mathematically defined operation.
struct DomainError : Error { using Error::Error; };
// rho sits on the excluded set {1 + k^2 pi^2 / 4}.
struct ForbiddenRho : DomainError { using DomainError::DomainError; };
struct BracketError : Error { using Error::Error; };
struct TruncationError : Error { using Error::Error; };
struct SingularShift : DomainError { using DomainError::DomainError; };
struct CapacityExceeded : Error { using Error::Error; };
struct ScheduleMismatch : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace frontier
