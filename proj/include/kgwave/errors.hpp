#pragma once

#include <stdexcept>
#include <string>

namespace kgwave {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct AliasingError : Error { using Error::Error; };
struct CoverageError : Error { using Error::Error; };
struct InternalError : Error { using Error::Error; };
struct IntegratorError : Error { using Error::Error; };
struct NoPeriodicOrbitError : Error { using Error::Error; };
struct DegeneracyError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// Linear solve hit a (numerically) vanishing divisor; (k, j) names the culprit mode.
struct NearSingularError : Error {
  int k;
  int j;
  double sigma_min;
  NearSingularError(const std::string& what, int k_, int j_, double s)
      : Error(what), k(k_), j(j_), sigma_min(s) {}
};

}  // namespace kgwave
