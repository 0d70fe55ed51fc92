#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "holeburn/errors.hpp"

namespace holeburn {

// How a parameter is represented inside the optimizer.
enum class Transform {
  Identity,
  LogPositive,  // optimized as ln(p); p stays strictly positive
  Fixed,        // held at its initial value; zero variance
};

struct FitOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-10;  // max |cos| between residual and any Jacobian column
  double step_tolerance = 1e-12;      // ||step|| <= tol * (||theta|| + tol)
  double cost_tolerance = 1e-15;      // relative cost decrease of an accepted step
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 10.0;
  double max_damping = 1e32;
  double jacobian_relative_step = 1e-6;
  double jacobian_absolute_step = 1e-9;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

// Residuals and the optional Jacobian are written in natural parameter space;
// transforms are applied by the engine.
struct FitProblem {
  ResidualFn residual;
  Eigen::VectorXd initial;
  std::vector<Transform> transforms;   // empty = all Identity
  Eigen::VectorXd weights;             // multiplies residual i; empty = unit weights
  std::vector<std::string> names;      // optional, carried into the result
  JacobianFn jacobian;                 // optional analytic Jacobian
  FitOptions options;
};

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd estimates;
  Eigen::VectorXd std_errors;
  Eigen::MatrixXd covariance;           // residual-variance scaled
  Eigen::MatrixXd unscaled_covariance;  // (J^T J)^+ mapped to natural space
  double residual_norm = 0.0;           // weighted 2-norm at the estimate
  double residual_variance = 0.0;       // ||r||^2 / (m - p_free)
  int iterations = 0;
  int accepted_steps = 0;
  bool converged = false;
  std::string message;
  std::vector<double> accepted_norms;   // weighted residual norm after each accepted step, with the start first

  double value(const std::string& name) const;
  double stderr_of(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;
};

class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, FitResult result)
      : Error(what), result_(std::move(result)) {}
  const FitResult& result() const { return result_; }

 private:
  FitResult result_;
};

// Damped Gauss-Newton iteration. Never throws ConvergenceFailure; inspect `converged`.
// Throws NumericalBreakdown when the start is non-finite or no damping level helps.
FitResult solve_least_squares(const FitProblem& problem);

// As solve_least_squares, but throws ConvergenceFailure (carrying the result) when
// tolerances were not met.
FitResult levenberg_marquardt(const FitProblem& problem);

// Central differences with step max(relative_step |p_j|, absolute_step).
Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& p,
                                 double relative_step = 1e-6, double absolute_step = 1e-9);

struct PowerLawFit {
  double amplitude = 0.0;
  double exponent = 0.0;
  double exponent_stderr = 0.0;
  double amplitude_stderr = 0.0;
  double r_squared = 0.0;
};

// Weighted least squares of ln y on ln x. y_err (absolute, same unit as y) gives
// weights 1/(y_err/y)^2; the regression is order-independent.
PowerLawFit powerlaw_fit(std::span<const double> x, std::span<const double> y,
                         std::span<const double> y_err = {});

// Same regression with the exponent held fixed; only the amplitude is estimated.
PowerLawFit powerlaw_fit_fixed_exponent(std::span<const double> x, std::span<const double> y,
                                        double exponent, std::span<const double> y_err = {});

}  // namespace holeburn
