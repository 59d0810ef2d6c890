#pragma once

#include <stdexcept>
#include <string>

namespace tspca {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or non-finite data (NaN cells, ragged rows, too few observations).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// An argument outside its admissible range (lag, bandwidth, block size, level).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Tied or nonpositive eigenvalues where strictly distinct positive ones are required.
class DegenerateEigenvalues : public Error {
 public:
  using Error::Error;
};

/// The Jacobi sweep cap was reached before the off-diagonal mass vanished.
class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

/// A VAR model whose companion matrix has spectral radius >= 1.
class NonStationaryModel : public Error {
 public:
  using Error::Error;
};

}  // namespace tspca
