#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stochlind {

// Operand shapes disagree, or an array has the wrong length.
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// A model violates one of the hard invariants (weight normalization,
// unit-diagonal PSD covariance, Hermitian Hamiltonian, positive weights).
class ModelError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Run parameters are inconsistent (e.g. a step that does not divide the
// final time).
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Arithmetic produced NaN/Inf, or a step size is far outside the stable
// regime.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class TrajectoryError : public NumericalError {
  public:
    TrajectoryError(std::uint64_t trajectory, double time, const std::string& what)
        : NumericalError("trajectory " + std::to_string(trajectory) + " at t=" +
                         std::to_string(time) + ": " + what),
          trajectory_(trajectory),
          time_(time)
    {
    }

    std::uint64_t trajectory() const noexcept { return trajectory_; }
    double time() const noexcept { return time_; }

  private:
    std::uint64_t trajectory_;
    double time_;
};

}  // namespace stochlind
