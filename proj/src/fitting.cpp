#include "holeburn/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace holeburn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

// Maps the optimizer's free coordinates theta onto the full natural parameter vector.
class ParameterMap {
 public:
  explicit ParameterMap(const FitProblem& problem) : base_(problem.initial) {
    const auto n = static_cast<std::size_t>(problem.initial.size());
    kinds_ = problem.transforms.empty() ? std::vector<Transform>(n, Transform::Identity)
                                        : problem.transforms;
    if (kinds_.size() != n) throw ValidationError("fit problem: transforms size differs from parameters");
    for (std::size_t j = 0; j < n; ++j) {
      if (kinds_[j] == Transform::Fixed) continue;
      if (kinds_[j] == Transform::LogPositive && !(base_[j] > 0.0))
        throw ValidationError("fit problem: log-positive parameter must start > 0");
      free_.push_back(static_cast<Eigen::Index>(j));
    }
  }

  Eigen::Index free_count() const { return static_cast<Eigen::Index>(free_.size()); }
  const std::vector<Eigen::Index>& free() const { return free_; }

  Eigen::VectorXd to_theta(const Eigen::VectorXd& natural) const {
    Eigen::VectorXd theta(free_count());
    for (Eigen::Index i = 0; i < free_count(); ++i) {
      const auto j = free_[i];
      theta[i] = kinds_[j] == Transform::LogPositive ? std::log(natural[j]) : natural[j];
    }
    return theta;
  }

  Eigen::VectorXd to_natural(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd p = base_;
    for (Eigen::Index i = 0; i < free_count(); ++i) {
      const auto j = free_[i];
      p[j] = kinds_[j] == Transform::LogPositive ? std::exp(theta[i]) : theta[i];
    }
    return p;
  }

  // d natural_j / d theta_i for the free parameter i.
  Eigen::VectorXd derivative(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd d(free_count());
    for (Eigen::Index i = 0; i < free_count(); ++i) {
      d[i] = kinds_[free_[i]] == Transform::LogPositive ? std::exp(theta[i]) : 1.0;
    }
    return d;
  }

 private:
  Eigen::VectorXd base_;
  std::vector<Transform> kinds_;
  std::vector<Eigen::Index> free_;
};

// Pseudo-inverse of a symmetric PSD matrix; parameters touching a null direction get
// infinite variance.
Eigen::MatrixXd psd_inverse(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(n, n);
  if (n == 0) return inv;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const Eigen::MatrixXd& vec = eig.eigenvectors();
  const double cutoff = std::max(ev.cwiseAbs().maxCoeff(), 1e-300) * 1e-14 * static_cast<double>(n);
  std::vector<bool> degenerate(static_cast<std::size_t>(n), false);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (ev[k] > cutoff) {
      inv.noalias() += vec.col(k) * vec.col(k).transpose() / ev[k];
    } else {
      for (Eigen::Index j = 0; j < n; ++j)
        if (vec(j, k) * vec(j, k) > 1e-12) degenerate[static_cast<std::size_t>(j)] = true;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!degenerate[static_cast<std::size_t>(j)]) continue;
    inv.row(j).setZero();
    inv.col(j).setZero();
    inv(j, j) = kInf;
  }
  return inv;
}

}  // namespace

std::size_t FitResult::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("fit result has no parameter '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

double FitResult::value(const std::string& name) const {
  return estimates[static_cast<Eigen::Index>(index_of(name))];
}

double FitResult::stderr_of(const std::string& name) const {
  return std_errors[static_cast<Eigen::Index>(index_of(name))];
}

Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& p,
                                 double relative_step, double absolute_step) {
  Eigen::VectorXd probe = p;
  Eigen::MatrixXd jac;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double h = std::max(relative_step * std::abs(p[j]), absolute_step);
    probe[j] = p[j] + h;
    const double up = probe[j];
    const Eigen::VectorXd fp = f(probe);
    probe[j] = p[j] - h;
    const double down = probe[j];
    const Eigen::VectorXd fm = f(probe);
    probe[j] = p[j];
    if (!all_finite(fp) || !all_finite(fm) || fp.size() != fm.size())
      throw NumericalBreakdown("numeric_jacobian: non-finite residual near parameter " + std::to_string(j));
    if (j == 0) jac.resize(fp.size(), p.size());
    jac.col(j) = (fp - fm) / (up - down);
  }
  return jac;
}

FitResult solve_least_squares(const FitProblem& problem) {
  if (!problem.residual) throw ValidationError("fit problem: missing residual function");
  const FitOptions& opt = problem.options;
  const ParameterMap map(problem);
  const Eigen::Index n_free = map.free_count();

  auto weighted = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
    Eigen::VectorXd r = problem.residual(map.to_natural(theta));
    if (problem.weights.size() > 0) {
      if (problem.weights.size() != r.size()) throw ValidationError("fit problem: weights size differs from residuals");
      r.array() *= problem.weights.array();
    }
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& theta) -> Eigen::MatrixXd {
    if (!problem.jacobian)
      return numeric_jacobian(weighted, theta, opt.jacobian_relative_step, opt.jacobian_absolute_step);
    const Eigen::MatrixXd full = problem.jacobian(map.to_natural(theta));
    const Eigen::VectorXd d = map.derivative(theta);
    Eigen::MatrixXd j(full.rows(), n_free);
    for (Eigen::Index i = 0; i < n_free; ++i) j.col(i) = full.col(map.free()[static_cast<std::size_t>(i)]) * d[i];
    if (problem.weights.size() > 0) j = problem.weights.asDiagonal() * j;
    if (!j.allFinite()) throw NumericalBreakdown("analytic Jacobian is not finite");
    return j;
  };

  for (Eigen::Index j = 0; j < problem.initial.size(); ++j)
    if (!std::isfinite(problem.initial[j])) throw NumericalBreakdown("fit problem: non-finite initial parameter");
  if (problem.weights.size() > 0 && (problem.weights.array() <= 0.0).any())
    throw ValidationError("fit problem: weights must be positive");

  Eigen::VectorXd theta = map.to_theta(problem.initial);
  Eigen::VectorXd r = weighted(theta);
  if (!all_finite(r)) throw NumericalBreakdown("residual is not finite at the initial parameters");
  if (r.size() < n_free) throw ValidationError("fit problem: fewer residuals than free parameters");

  FitResult out;
  out.names = problem.names;
  double cost = r.squaredNorm();
  out.accepted_norms.push_back(std::sqrt(cost));

  double lambda = opt.initial_damping;
  Eigen::MatrixXd jac;
  bool jac_current = false;
  bool done = false;

  auto step_small = [&](const Eigen::VectorXd& step) {
    return step.norm() <= opt.step_tolerance * (theta.norm() + opt.step_tolerance);
  };

  while (!done) {
    jac = jacobian(theta);
    jac_current = true;
    const Eigen::VectorXd grad = jac.transpose() * r;

    const double rnorm = std::sqrt(cost);
    double cosine = 0.0;
    for (Eigen::Index i = 0; i < n_free; ++i) {
      const double cn = jac.col(i).norm();
      if (cn > 0.0 && rnorm > 0.0) cosine = std::max(cosine, std::abs(grad[i]) / (cn * rnorm));
    }
    if (cost == 0.0 || n_free == 0 || cosine < opt.gradient_tolerance) {
      out.converged = true;
      out.message = cost == 0.0 ? "zero residual" : "gradient tolerance met";
      break;
    }
    if (out.iterations >= opt.max_iterations) {
      out.message = "maximum iterations reached";
      break;
    }
    ++out.iterations;

    const Eigen::MatrixXd normal = jac.transpose() * jac;
    Eigen::VectorXd scale = normal.diagonal();
    const double floor = std::max(scale.maxCoeff(), 1e-300) * 1e-15;
    scale = scale.cwiseMax(floor);

    while (true) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal() += lambda * scale;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      Eigen::VectorXd step;
      bool solved = ldlt.info() == Eigen::Success;
      if (solved) {
        step = ldlt.solve(-grad);
        solved = step.allFinite();
      }
      if (solved) {
        const Eigen::VectorXd trial = theta + step;
        // A step that leaves the model's domain (e.g. exp overflow of a log
        // parameter) is rejected like any other uphill step.
        Eigen::VectorXd r_trial;
        double trial_cost = kInf;
        if (map.to_natural(trial).allFinite()) {
          try {
            r_trial = weighted(trial);
            if (all_finite(r_trial)) trial_cost = r_trial.squaredNorm();
          } catch (const DomainError&) {
          }
        }
        if (trial_cost < cost) {
          const bool tiny_step = step_small(step);
          const bool stalled = (cost - trial_cost) <= opt.cost_tolerance * cost;
          theta = trial;
          r = std::move(r_trial);
          cost = trial_cost;
          jac_current = false;
          ++out.accepted_steps;
          out.accepted_norms.push_back(std::sqrt(cost));
          lambda = std::max(lambda / opt.damping_decrease, 1e-300);
          if (tiny_step || stalled) {
            out.converged = true;
            out.message = tiny_step ? "step tolerance met" : "cost tolerance met";
            done = true;
          }
          break;
        }
        if (step_small(step)) {
          out.converged = true;
          out.message = "step tolerance met";
          done = true;
          break;
        }
      }
      lambda *= opt.damping_increase;
      if (lambda > opt.max_damping) {
        if (!solved) throw NumericalBreakdown("normal matrix singular at every damping level");
        out.message = "damping limit reached without decrease";
        done = true;
        break;
      }
    }
  }

  if (!jac_current) jac = jacobian(theta);
  const auto m = r.size();
  out.estimates = map.to_natural(theta);
  out.residual_norm = std::sqrt(cost);
  out.residual_variance = m > n_free ? cost / static_cast<double>(m - n_free) : 0.0;

  const Eigen::MatrixXd cov_theta = psd_inverse(jac.transpose() * jac);
  const Eigen::VectorXd d = map.derivative(theta);
  const auto n = problem.initial.size();
  out.unscaled_covariance = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n_free; ++a) {
    for (Eigen::Index b = 0; b < n_free; ++b) {
      const double c = cov_theta(a, b);
      const double v = (a == b || std::isfinite(c)) ? c * d[a] * d[b] : 0.0;
      out.unscaled_covariance(map.free()[static_cast<std::size_t>(a)], map.free()[static_cast<std::size_t>(b)]) = v;
    }
  }
  out.covariance = out.unscaled_covariance * out.residual_variance;
  for (Eigen::Index j = 0; j < n; ++j)
    if (std::isinf(out.unscaled_covariance(j, j))) out.covariance(j, j) = kInf;
  out.std_errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

FitResult levenberg_marquardt(const FitProblem& problem) {
  FitResult result = solve_least_squares(problem);
  if (!result.converged) throw ConvergenceFailure("least squares did not converge: " + result.message, result);
  return result;
}

namespace {

struct Sample {
  double u, v, w;
};

std::vector<Sample> log_samples(std::span<const double> x, std::span<const double> y,
                                std::span<const double> y_err, std::size_t min_count) {
  if (x.size() != y.size()) throw DomainError("powerlaw_fit: x and y lengths differ");
  if (!y_err.empty() && y_err.size() != y.size()) throw DomainError("powerlaw_fit: y_err length differs");
  if (x.size() < min_count) throw DomainError("powerlaw_fit: at least " + std::to_string(min_count) + " points required");
  std::vector<Sample> s;
  s.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw DomainError("powerlaw_fit: samples must be positive and finite");
    double w = 1.0;
    if (!y_err.empty()) {
      if (!(y_err[i] > 0.0) || !std::isfinite(y_err[i])) throw DomainError("powerlaw_fit: y_err must be positive");
      const double rel = y_err[i] / y[i];
      w = 1.0 / (rel * rel);
    }
    s.push_back({std::log(x[i]), std::log(y[i]), w});
  }
  // Canonical order makes every sum below independent of the input permutation.
  std::sort(s.begin(), s.end(), [](const Sample& a, const Sample& b) {
    return std::tie(a.u, a.v, a.w) < std::tie(b.u, b.v, b.w);
  });
  return s;
}

// Weighted mean computed as an offset from the first sample; exact for constant data.
double weighted_mean(const std::vector<Sample>& s, double Sample::*field, double wsum) {
  const double origin = s.front().*field;
  double acc = 0.0;
  for (const auto& p : s) acc += p.w * (p.*field - origin);
  return origin + acc / wsum;
}

}  // namespace

PowerLawFit powerlaw_fit(std::span<const double> x, std::span<const double> y, std::span<const double> y_err) {
  const auto s = log_samples(x, y, y_err, 3);
  double wsum = 0.0;
  for (const auto& p : s) wsum += p.w;
  const double ubar = weighted_mean(s, &Sample::u, wsum);
  const double vbar = weighted_mean(s, &Sample::v, wsum);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : s) {
    const double du = p.u - ubar, dv = p.v - vbar;
    sxx += p.w * du * du;
    sxy += p.w * du * dv;
    syy += p.w * dv * dv;
  }
  if (!(sxx > 0.0)) throw DomainError("powerlaw_fit: x values must not all be equal");
  const double slope = sxy / sxx;
  const double intercept = vbar - slope * ubar;
  double ss = 0.0;
  for (const auto& p : s) {
    const double e = p.v - (intercept + slope * p.u);
    ss += p.w * e * e;
  }
  const double s2 = ss / static_cast<double>(s.size() - 2);

  PowerLawFit fit;
  fit.exponent = slope;
  fit.amplitude = std::exp(intercept);
  fit.exponent_stderr = std::sqrt(s2 / sxx);
  fit.amplitude_stderr = fit.amplitude * std::sqrt(s2 * (1.0 / wsum + ubar * ubar / sxx));
  fit.r_squared = syy > 0.0 ? 1.0 - ss / syy : 1.0;
  return fit;
}

PowerLawFit powerlaw_fit_fixed_exponent(std::span<const double> x, std::span<const double> y, double exponent,
                                        std::span<const double> y_err) {
  auto s = log_samples(x, y, y_err, 1);
  double wsum = 0.0;
  for (const auto& p : s) wsum += p.w;
  const double vbar = weighted_mean(s, &Sample::v, wsum);
  double syy = 0.0;
  for (const auto& p : s) syy += p.w * (p.v - vbar) * (p.v - vbar);
  for (auto& p : s) p.v -= exponent * p.u;
  const double level = weighted_mean(s, &Sample::v, wsum);
  double ss = 0.0;
  for (const auto& p : s) ss += p.w * (p.v - level) * (p.v - level);
  const double s2 = s.size() > 1 ? ss / static_cast<double>(s.size() - 1) : 0.0;
  PowerLawFit fit;
  fit.exponent = exponent;
  fit.amplitude = std::exp(level);
  fit.amplitude_stderr = fit.amplitude * std::sqrt(s2 / wsum);
  fit.exponent_stderr = 0.0;
  fit.r_squared = syy > 0.0 ? 1.0 - ss / syy : 1.0;
  return fit;
}

}  // namespace holeburn
