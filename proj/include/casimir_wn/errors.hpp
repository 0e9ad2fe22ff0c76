#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace casimir_wn {

/// Malformed or inconsistent run configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// The structure matrix of the factorization ODE lost invertibility.
struct SingularStructureMatrix : std::runtime_error {
  double t;
  std::vector<std::complex<double>> alpha;
  double condition;
  SingularStructureMatrix(double t_, std::vector<std::complex<double>> a,
                          double cond, const std::string& what)
      : std::runtime_error(what), t(t_), alpha(std::move(a)), condition(cond) {}
};

/// Adaptive stepper could not reach the requested time.
struct IntegrationFailure : std::runtime_error {
  double t_last;
  std::vector<std::complex<double>> state;
  IntegrationFailure(double t, std::vector<std::complex<double>> s,
                     const std::string& what)
      : std::runtime_error(what), t_last(t), state(std::move(s)) {}
};

/// Truncated-space reference evolution stopped being trustworthy.
struct OracleDivergence : std::runtime_error {
  double t;
  double norm_drift;
  OracleDivergence(double t_, double drift, const std::string& what)
      : std::runtime_error(what), t(t_), norm_drift(drift) {}
};

/// A quantity that must be real (up to roundoff) came out complex,
/// or an internal identity failed beyond its tolerance.
struct InternalConsistencyError : std::logic_error {
  explicit InternalConsistencyError(const std::string& what)
      : std::logic_error(what) {}
};

}  // namespace casimir_wn
