#ifndef THI_ERRORS_HPP
#define THI_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace thi {

/// Base class for failures of the numerics (as opposed to bad input).
class NumericalFailure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// The constant column has zero G-norm, so no basis can be built.
class DegenerateInput : public NumericalFailure
{
public:
  using NumericalFailure::NumericalFailure;
};

/// Log map requested outside the injectivity radius.
class CutLocusError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// Input violates a manifold constraint (unit norm, orthogonality, tangency).
class ConstraintViolation : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

} // namespace thi

#endif // THI_ERRORS_HPP
