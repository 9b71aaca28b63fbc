#ifndef PAM_ERROR_HPP
#define PAM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pam {

/// Base of every error thrown by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent input parameters.
class parameter_error : public error {
 public:
  using error::error;
};

/// A requested box does not fit the dense-storage budget.
class capacity_error : public parameter_error {
 public:
  using parameter_error::parameter_error;
};

/// Field/operator dimension mismatch.
class dimension_error : public parameter_error {
 public:
  using parameter_error::parameter_error;
};

/// The requested quantity is infinite (e.g. a recurrent-walk Green function).
class divergence_error : public error {
 public:
  using error::error;
};

/// Outside the dimensions for which an operation is defined.
class domain_error : public error {
 public:
  using error::error;
};

/// Iterative solver did not reach its tolerance. Carries the best iterate.
class convergence_error : public error {
 public:
  convergence_error(const std::string& what, double best_value, double best_residual)
      : error(what), best_value_(best_value), best_residual_(best_residual) {}

  double best_value() const noexcept { return best_value_; }
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_value_;
  double best_residual_;
};

/// An eigenvector whose tensor square vanishes.
class degenerate_error : public error {
 public:
  using error::error;
};

/// A jump path does not cover the requested time horizon.
class horizon_error : public parameter_error {
 public:
  using parameter_error::parameter_error;
};

/// Adaptive time stepping collapsed below the representable step size.
class step_underflow_error : public convergence_error {
 public:
  using convergence_error::convergence_error;
};

}  // namespace pam

#endif  // PAM_ERROR_HPP
