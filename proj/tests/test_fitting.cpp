#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "holeburn/fitting.hpp"
#include "holeburn/models.hpp"
#include "holeburn/rng.hpp"
#include "oracle.hpp"

using namespace holeburn;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

FitProblem linear_problem(const std::vector<double>& x, const std::vector<double>& y, Eigen::VectorXd start) {
  FitProblem p;
  p.initial = std::move(start);
  p.residual = [x, y](const Eigen::VectorXd& t) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) r[static_cast<Eigen::Index>(i)] = t[0] * x[i] + t[1] - y[i];
    return r;
  };
  p.names = {"a", "b"};
  return p;
}

// 30-point noiseless saturation curve, beta = 1.05
struct SatData {
  std::vector<double> n, inv_q;
};

SatData sat_data() {
  const StmSaturationParams truth{1e4, 20.0, 1.05, 1e6};
  SatData d;
  for (int i = 0; i < 30; ++i) {
    d.n.push_back(std::pow(10.0, -2.0 + 9.0 * i / 29.0));
    d.inv_q.push_back(stm_inverse_q(d.n.back(), truth, {2.399e9, 0.0}));
  }
  return d;
}

FitProblem sat_problem(const SatData& d) {
  FitProblem p;
  p.residual = [d](const Eigen::VectorXd& t) {
    const StmSaturationParams m{t[0], t[1], t[2], t[3]};
    Eigen::VectorXd r(static_cast<Eigen::Index>(d.n.size()));
    for (std::size_t i = 0; i < d.n.size(); ++i)
      r[static_cast<Eigen::Index>(i)] = stm_inverse_q(d.n[i], m, {2.399e9, 0.0}) / d.inv_q[i] - 1.0;
    return r;
  };
  p.initial = Eigen::Vector4d(1.5e4, 30.0, 1.575, 1.5e6);
  p.transforms = std::vector<Transform>(4, Transform::LogPositive);
  p.names = {"q_tls0", "n_c", "beta", "q_res"};
  return p;
}

}  // namespace

TEST_CASE("linear model on exact data") {
  const std::vector<double> x{0, 1, 2, 3, 4, 5}, y{1, 3.5, 6, 8.5, 11, 13.5};
  const FitResult r = levenberg_marquardt(linear_problem(x, y, Eigen::Vector2d(0.0, 0.0)));
  CHECK(r.converged);
  CHECK(std::abs(r.value("a") - 2.5) < 1e-9);
  CHECK(std::abs(r.value("b") - 1.0) < 1e-9);
  CHECK(r.residual_norm < 1e-9);
  CHECK(r.iterations <= 6);
}

TEST_CASE("start at the optimum") {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const FitResult r = levenberg_marquardt(linear_problem(x, y, Eigen::Vector2d(2.0, 1.0)));
  CHECK(r.converged);
  CHECK(r.accepted_steps == 0);
  CHECK(r.value("a") == 2.0);
  CHECK(r.value("b") == 1.0);
}

TEST_CASE("saturation law from a perturbed start") {
  const FitResult r = levenberg_marquardt(sat_problem(sat_data()));
  CHECK(r.converged);
  CHECK(rel(r.value("q_tls0"), 1e4) < 1e-6);
  CHECK(rel(r.value("n_c"), 20.0) < 1e-6);
  CHECK(rel(r.value("beta"), 1.05) < 1e-6);
  CHECK(rel(r.value("q_res"), 1e6) < 1e-6);

  // accepted residual norms never increase
  REQUIRE(r.accepted_norms.size() >= 2);
  for (std::size_t i = 1; i < r.accepted_norms.size(); ++i) CHECK(r.accepted_norms[i] <= r.accepted_norms[i - 1]);
}

TEST_CASE("covariance is symmetric PSD and matches the standard errors") {
  SatData d = sat_data();
  SplitMix64 rng(11);
  for (auto& v : d.inv_q) v *= 1.0 + 0.01 * rng.normal();
  const FitResult r = levenberg_marquardt(sat_problem(d));
  REQUIRE(r.converged);
  CHECK((r.covariance - r.covariance.transpose()).norm() <= 1e-12 * r.covariance.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.covariance);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12 * es.eigenvalues().maxCoeff());
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(rel(r.std_errors[i], std::sqrt(r.covariance(i, i))) < 1e-12);
}

TEST_CASE("fixed parameters stay put with zero variance") {
  FitProblem p = sat_problem(sat_data());
  p.initial[2] = 1.05;
  p.transforms[2] = Transform::Fixed;
  const FitResult r = levenberg_marquardt(p);
  CHECK(r.value("beta") == 1.05);
  CHECK(r.stderr_of("beta") == 0.0);
  CHECK(rel(r.value("n_c"), 20.0) < 1e-6);
}

TEST_CASE("non-convergence and breakdown") {
  FitProblem p = sat_problem(sat_data());
  p.options.max_iterations = 1;
  CHECK_THROWS_AS(levenberg_marquardt(p), ConvergenceFailure);
  const FitResult r = solve_least_squares(p);
  CHECK_FALSE(r.converged);
  try {
    levenberg_marquardt(p);
  } catch (const ConvergenceFailure& e) {
    CHECK(e.result().estimates.size() == 4);
  }

  FitProblem bad = sat_problem(sat_data());
  bad.residual = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(5, std::nan("")); };
  CHECK_THROWS_AS(levenberg_marquardt(bad), NumericalBreakdown);
}

TEST_CASE("numeric Jacobian") {
  const ResidualFn square = [](const Eigen::VectorXd& p) { return Eigen::VectorXd::Constant(1, p[0] * p[0]); };
  CHECK(std::abs(numeric_jacobian(square, Eigen::VectorXd::Constant(1, 3.0))(0, 0) - 6.0) < 1e-7);

  const ResidualFn linear = [](const Eigen::VectorXd& p) { return Eigen::Vector2d(3.0 * p[0] - 2.0 * p[1], 0.5 * p[1]); };
  const Eigen::MatrixXd j = numeric_jacobian(linear, Eigen::Vector2d(1.25, -4.0));
  CHECK(std::abs(j(0, 0) - 3.0) < 1e-9);
  CHECK(std::abs(j(0, 1) + 2.0) < 1e-9);
  CHECK(std::abs(j(1, 0)) < 1e-12);
  CHECK(std::abs(j(1, 1) - 0.5) < 1e-9);

  // d/dOmega of the two-tone loss at Delta = Omega, against a 50-digit central difference
  const double omega = 3e5;
  const ResidualFn loss = [](const Eigen::VectorXd& p) { return Eigen::VectorXd::Constant(1, stm_two_tone_loss(3e5, p[0])); };
  const double got = numeric_jacobian(loss, Eigen::VectorXd::Constant(1, omega))(0, 0);
  using oracle::Big;
  const Big h("1e-15");
  const Big w(omega);
  const Big d = (oracle::two_tone_loss(w, w * (1 + h)) - oracle::two_tone_loss(w, w * (1 - h))) / (2 * h * w);
  CHECK(rel(got, oracle::to_double(d)) < 1e-6);

  const ResidualFn nan_fn = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, std::nan("")); };
  CHECK_THROWS_AS(numeric_jacobian(nan_fn, Eigen::VectorXd::Constant(1, 1.0)), NumericalBreakdown);
}

TEST_CASE("power-law fit examples") {
  std::vector<double> x, y;
  for (int i = 0; i < 12; ++i) {
    x.push_back(std::pow(10.0, 0.25 * i));
    y.push_back(2.0 * std::sqrt(x.back()));
  }
  PowerLawFit f = powerlaw_fit(x, y);
  CHECK(rel(f.amplitude, 2.0) < 1e-13);
  CHECK(std::abs(f.exponent - 0.5) < 1e-14);
  CHECK(f.exponent_stderr < 1e-12);

  const std::vector<double> flat(x.size(), 7.5);
  f = powerlaw_fit(x, flat);
  CHECK(f.exponent == 0.0);
  CHECK(rel(f.amplitude, 7.5) < 1e-15);

  CHECK_THROWS_AS(powerlaw_fit(std::vector<double>{1, 2, -3}, std::vector<double>{1, 2, 3}), DomainError);
  CHECK_THROWS_AS(powerlaw_fit(std::vector<double>{1, 2, 3}, std::vector<double>{1, 0, 3}), DomainError);

  const PowerLawFit fixed = powerlaw_fit_fixed_exponent(x, y, 0.5);
  CHECK(fixed.exponent == 0.5);
  CHECK(rel(fixed.amplitude, 2.0) < 1e-13);
}

TEST_CASE("power-law fit: scale equivariance and permutation invariance") {
  SplitMix64 rng(5);
  std::vector<double> x, y, e;
  for (int i = 0; i < 20; ++i) {
    x.push_back(std::pow(10.0, 3.0 * i / 19.0));
    y.push_back(std::pow(x.back(), 0.3) * std::exp(0.02 * rng.normal()));
    e.push_back(0.02 * y.back() * (1.0 + rng.uniform()));
  }
  for (bool weighted : {false, true}) {
    const std::span<const double> err = weighted ? std::span<const double>(e) : std::span<const double>();
    const PowerLawFit base = powerlaw_fit(x, y, err);

    for (double c : {3.7, 1e-5, 2.0}) {
      std::vector<double> ys = y, es = e;
      for (auto& v : ys) v *= c;
      for (auto& v : es) v *= c;
      const PowerLawFit s = powerlaw_fit(x, ys, weighted ? std::span<const double>(es) : std::span<const double>());
      CHECK(std::abs(s.exponent - base.exponent) <= 1e-12 * std::abs(base.exponent));
      CHECK(rel(s.amplitude, c * base.amplitude) < 1e-12);
    }

    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int trial = 0; trial < 5; ++trial) {
      std::reverse(idx.begin(), idx.end());
      std::rotate(idx.begin(), idx.begin() + 3 + trial, idx.end());
      std::vector<double> xp, yp, ep;
      for (auto i : idx) xp.push_back(x[i]), yp.push_back(y[i]), ep.push_back(e[i]);
      const PowerLawFit p = powerlaw_fit(xp, yp, weighted ? std::span<const double>(ep) : std::span<const double>());
      CHECK(p.exponent == base.exponent);
      CHECK(p.amplitude == base.amplitude);
      CHECK(p.exponent_stderr == base.exponent_stderr);
    }
  }
}

TEST_CASE("power-law fit Monte Carlo: k = 0.3 with 2% log-normal noise") {
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SplitMix64 rng(SplitMix64::mix(seed));
    std::vector<double> x, y;
    for (int i = 0; i < 20; ++i) {
      x.push_back(std::pow(10.0, 3.0 * i / 19.0));
      y.push_back(std::pow(x.back(), 0.3) * std::exp(0.02 * rng.normal()));
    }
    inside += std::abs(powerlaw_fit(x, y).exponent - 0.3) <= 0.02;
  }
  CHECK(inside == 200);
}
