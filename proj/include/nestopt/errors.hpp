#ifndef NESTOPT_ERRORS_HPP
#define NESTOPT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nestopt {

// A documented precondition of an operation does not hold (for example an
// iterate that is not in the feasible set).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// An iterate became non-finite. Carries the iteration at which it happened.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, long iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

// A diagnostic needs ground truth (optimal value, Lipschitz constants) that
// the problem does not provide.
class UnavailableDiagnostic : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nestopt

#endif  // NESTOPT_ERRORS_HPP
