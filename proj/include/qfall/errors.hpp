#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qfall {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Invalid parameters, grids or configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

/// Invalid wavepacket specification (including the degenerate destructive limit).
class SpecError : public ConfigError {
 public:
  using ConfigError::ConfigError;
  const char* kind() const noexcept override { return "spec"; }
};

/// A function was called outside its contract (negative time, unnormalized field...).
class PreconditionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "precondition"; }
};

/// The wavefunction does not fit on the grid.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

/// Runtime failure inside a time integration.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }
  const char* kind() const noexcept override { return "solver"; }

 private:
  std::size_t step_;
};

/// The mean trajectory never reaches the detector plane.
class NoCrossingError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "no_crossing"; }
};

/// Requested preparation velocity is outside the reachable range of the state family.
class InfeasibleMatchError : public Error {
 public:
  InfeasibleMatchError(double target_velocity, double max_velocity)
      : Error("target velocity " + std::to_string(target_velocity) +
              " exceeds reachable maximum " + std::to_string(max_velocity)),
        target_(target_velocity),
        v_max_(max_velocity) {}
  double target_velocity() const noexcept { return target_; }
  double max_velocity() const noexcept { return v_max_; }
  const char* kind() const noexcept override { return "infeasible"; }

 private:
  double target_;
  double v_max_;
};

}  // namespace qfall
