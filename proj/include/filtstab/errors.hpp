#pragma once

#include <stdexcept>
#include <string>

namespace filtstab {

// Numerical failures thrown by the kernels. Input validation does not
// throw; it returns error lists (see model.hpp).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteError : NumericalError {
  using NumericalError::NumericalError;
};

struct EigenFailure : NumericalError {
  using NumericalError::NumericalError;
};

// Word count of the brute-force observability enumeration exceeded the cap.
struct ExplosionGuard : NumericalError {
  using NumericalError::NumericalError;
};

// The nonobservable space handed to restrict_generator_to_N is not
// invariant under the adjoint generator; signals an upstream error.
struct InvarianceViolation : NumericalError {
  using NumericalError::NumericalError;
};

// All Bayes-correction weights vanished (possible for counting
// observations with a prior supported off the active intensity states).
struct DegenerateWeight : NumericalError {
  using NumericalError::NumericalError;
};

// Riccati flow left the PSD cone; the step size is too large.
struct PsdLost : NumericalError {
  using NumericalError::NumericalError;
};

// The linear pair experiment refuses models failing the Hautus test.
struct NotDetectable : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace filtstab
