#pragma once

#include <stdexcept>
#include <string>

namespace fermiflux {

/// Base class for all fermiflux errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input matrix fails a Hermiticity precondition.
struct NotHermitian : Error {
  using Error::Error;
};

/// Spectrum lies outside the admissible interval (the state symbol is not
/// bounded away from 0 and 1 as required for entropy computations).
struct SpectrumOutOfRange : Error {
  using Error::Error;
};

/// Effective sample matrix has spectral radius too close to (or beyond) 1;
/// mixing assumptions fail and fixed-point solves are ill-posed.
struct SpectralRadiusTooLarge : Error {
  using Error::Error;
};

/// (M - e^{i theta}) is numerically singular at a requested frequency.
struct SingularResolvent : Error {
  using Error::Error;
};

/// Flux observable does not commute with the reservoir projections.
struct ObservableNotBlockDiagonal : Error {
  using Error::Error;
};

/// Requested evolution time exceeds the causal validity horizon of the
/// truncated lattice.
struct TruncationExceeded : Error {
  using Error::Error;
};

/// Controllability (Kalman) rank condition fails for (W, A).
struct KalmanFailed : Error {
  using Error::Error;
};

/// A degenerate eigenvalue group cannot be split into well-defined
/// sub-projectors from first-order data alone.
struct UnresolvedSplitting : Error {
  using Error::Error;
};

/// Operation requires all eigenvalues of W simple.
struct NotSimple : Error {
  using Error::Error;
};

/// Operation requires all reservoir projectors of rank one.
struct NotRankOne : Error {
  using Error::Error;
};

/// Malformed or inconsistent run configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Internal numerical failure (solver did not meet its tolerance).
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace fermiflux
