#pragma once

#include <stdexcept>
#include <string>

namespace whmpc {

/// Raised when the layered plant produces a non-finite temperature.
class SimulationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The mixing-valve flow expression is singular (upper temperature at or below inlet).
class DegenerateValve : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IdentificationInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The optimizer hit its iteration cap or broke down numerically.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ForecastUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or incomplete input data (price files, draw traces, scenario files).
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace whmpc
