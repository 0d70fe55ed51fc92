#include "holeburn/resonator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "holeburn/units.hpp"

namespace holeburn {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_phase(double phi) {
  const double w = std::remainder(phi, 2.0 * kPi);
  return w <= -kPi ? w + 2.0 * kPi : w;
}

std::vector<double> unwrapped_phase(const std::vector<Complex>& s) {
  std::vector<double> phase(s.size());
  double offset = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = std::arg(s[i]);
    if (i > 0) {
      const double prev = phase[i - 1] - offset;
      double jump = p - prev;
      if (jump > kPi) offset -= 2.0 * kPi * std::round(jump / (2.0 * kPi));
      else if (jump < -kPi) offset += 2.0 * kPi * std::round(-jump / (2.0 * kPi));
    }
    phase[i] = p + offset;
  }
  return phase;
}

// Electrical delay slope (rad/Hz) from the outer 5% on each side, one shared slope with
// a separate intercept per side so a 2 pi winding across an overcoupled dip is ignored.
double edge_phase_slope(const ReflectionTrace& t, std::size_t edge) {
  const auto& f = t.frequencies_hz;
  const auto phase = unwrapped_phase(t.s11);
  const std::size_t n = f.size();
  double sxy = 0.0, sxx = 0.0;
  auto accumulate = [&](std::size_t lo, std::size_t hi) {
    double fm = 0.0, pm = 0.0;
    for (std::size_t i = lo; i < hi; ++i) { fm += f[i]; pm += phase[i]; }
    fm /= static_cast<double>(hi - lo);
    pm /= static_cast<double>(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) {
      sxy += (f[i] - fm) * (phase[i] - pm);
      sxx += (f[i] - fm) * (f[i] - fm);
    }
  };
  accumulate(0, edge);
  accumulate(n - edge, n);
  if (!(sxx > 0.0)) return (phase[n - 1] - phase[0]) / (f[n - 1] - f[0]);
  const double slope = sxy / sxx;
  if (2 * edge <= 3) return slope;

  // A slope the edge windows cannot resolve is phase noise; rotating the whole
  // trace by it would fake a dip at the far end.
  double rss = 0.0;
  auto residuals = [&](std::size_t lo, std::size_t hi) {
    double fm = 0.0, pm = 0.0;
    for (std::size_t i = lo; i < hi; ++i) { fm += f[i]; pm += phase[i]; }
    fm /= static_cast<double>(hi - lo);
    pm /= static_cast<double>(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) {
      const double r = phase[i] - pm - slope * (f[i] - fm);
      rss += r * r;
    }
  };
  residuals(0, edge);
  residuals(n - edge, n);
  const double stderr = std::sqrt(rss / static_cast<double>(2 * edge - 3) / sxx);
  return std::abs(slope) > 3.0 * stderr ? slope : 0.0;
}

}  // namespace

void validate(const ReflectionTrace& trace) {
  const auto& f = trace.frequencies_hz;
  if (f.size() != trace.s11.size()) throw ValidationError("reflection trace: frequency and S11 lengths differ");
  if (f.size() < 8) throw ValidationError("reflection trace: at least 8 points required");
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i]) || !std::isfinite(trace.s11[i].real()) || !std::isfinite(trace.s11[i].imag()))
      throw ValidationError("reflection trace: non-finite sample");
    if (i > 0 && !(f[i] > f[i - 1])) throw ValidationError("reflection trace: frequencies must be strictly increasing");
  }
}

void validate(const ModeFit& m) {
  if (!(m.f_r_hz > 0.0) || !std::isfinite(m.f_r_hz)) throw DomainError("mode: f_r must be positive");
  if (!(m.q_int > 0.0) || !(m.q_ext > 0.0)) throw DomainError("mode: quality factors must be positive");
  if (!(m.background.amplitude > 0.0)) throw DomainError("mode: background amplitude must be positive");
}

void validate(const ModeGeometry& g) {
  if (!(g.fsr_hz > 0.0)) throw ValidationError("geometry: fsr must be positive");
  if (g.mode_count < 1) throw ValidationError("geometry: mode_count must be >= 1");
  if (!(g.stopband_width_hz > 0.0) || !(g.stopband_center_hz > 0.0))
    throw ValidationError("geometry: stopband center and width must be positive");
  if (static_cast<double>(g.mode_count - 1) * g.fsr_hz > g.stopband_width_hz)
    throw ValidationError("geometry: mode_count modes do not fit inside the stopband");
}

std::vector<double> ModeGeometry::mode_frequencies() const {
  validate(*this);
  const int lo = -((mode_count - 1) / 2);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(mode_count));
  for (int m = 0; m < mode_count; ++m) out.push_back(stopband_center_hz + (lo + m) * fsr_hz);
  return out;
}

Complex model_s11(double f_hz, const ModeFit& m) {
  const double ql = m.q_loaded();
  const double coupling = std::isinf(m.q_ext) ? 0.0 : 2.0 * ql / m.q_ext;
  const Complex lorentz = 1.0 + Complex(0.0, 2.0 * ql * (f_hz - m.f_r_hz) / m.f_r_hz);
  const double phi = m.background.phase + units::two_pi * (f_hz - m.f_r_hz) * m.background.delay_s;
  return std::polar(m.background.amplitude, phi) * (1.0 - coupling / lorentz);
}

ModeFit initial_mode_guess(const ReflectionTrace& trace) {
  validate(trace);
  const auto& f = trace.frequencies_hz;
  const std::size_t n = f.size();
  const std::size_t edge = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(n))));
  const double f_c = 0.5 * (f.front() + f.back());

  const double slope = edge_phase_slope(trace, edge);
  std::vector<Complex> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = trace.s11[i] * std::polar(1.0, -slope * (f[i] - f_c));

  Complex bg{0.0, 0.0};
  for (std::size_t i = 0; i < edge; ++i) bg += s[i] + s[n - 1 - i];
  bg /= static_cast<double>(2 * edge);
  if (std::abs(bg) == 0.0) throw NoResonance("reflection trace has zero background");

  // Resonant part d = 1 - s / B; |d| peaks at f_r with height 2 q_loaded / q_ext.
  std::vector<double> depth(n);
  for (std::size_t i = 0; i < n; ++i) depth[i] = std::abs(1.0 - s[i] / bg);
  std::vector<double> steps;
  for (std::size_t i = 1; i < n; ++i) steps.push_back(std::abs(s[i] / bg - s[i - 1] / bg));
  std::nth_element(steps.begin(), steps.begin() + static_cast<long>(steps.size() / 2), steps.end());
  // Median |difference| of complex Gaussian noise is 1.665 sigma per component.
  const double sigma = steps[steps.size() / 2] / 1.665;

  const auto peak = static_cast<std::size_t>(std::max_element(depth.begin(), depth.end()) - depth.begin());
  const double height = depth[peak];
  if (!(height > 6.0 * sigma + 1e-9)) throw NoResonance("no dip above the noise floor");

  const double half = height / std::numbers::sqrt2;  // half power of the Lorentzian |d|^2
  auto crossing = [&](bool right) -> std::optional<double> {
    std::size_t i = peak;
    while (right ? i + 1 < n : i > 0) {
      const std::size_t j = right ? i + 1 : i - 1;
      if (depth[j] <= half) {
        const double t = (depth[i] - half) / (depth[i] - depth[j]);
        return f[i] + t * (f[j] - f[i]);
      }
      i = j;
    }
    return std::nullopt;
  };
  const auto lo = crossing(false), hi = crossing(true);
  double fwhm;
  if (lo && hi) fwhm = *hi - *lo;
  else if (lo) fwhm = 2.0 * (f[peak] - *lo);
  else if (hi) fwhm = 2.0 * (*hi - f[peak]);
  else fwhm = 0.25 * (f.back() - f.front());
  fwhm = std::max(fwhm, f[std::min(peak + 1, n - 1)] - f[peak > 0 ? peak - 1 : 0]);

  ModeFit g;
  g.f_r_hz = f[peak];
  const double ql = g.f_r_hz / fwhm;
  const double coupling = std::min(height, 1.9);
  g.q_ext = 2.0 * ql / coupling;
  const double inv_qi = 1.0 / ql - 1.0 / g.q_ext;
  g.q_int = inv_qi > 0.0 ? 1.0 / inv_qi : 10.0 * ql;
  g.background.amplitude = std::abs(bg);
  g.background.delay_s = slope / units::two_pi;
  g.background.phase = wrap_phase(std::arg(bg) + slope * (g.f_r_hz - f_c));
  return g;
}

ResonanceFit fit_resonance(const ReflectionTrace& trace, const std::optional<ModeFit>& guess,
                           const FitOptions& options) {
  validate(trace);
  const ModeFit start = guess ? *guess : initial_mode_guess(trace);
  validate(start);
  const auto& f = trace.frequencies_hz;
  const std::size_t n = f.size();
  const double f_c = 0.5 * (f.front() + f.back());
  // Internal coordinates keep every parameter O(1): f_r as an offset in linewidths,
  // phase referenced to the trace center, delay in cycles per linewidth.
  const double width = start.f_r_hz / start.q_loaded();

  Eigen::VectorXd p0(6);
  p0 << (start.f_r_hz - f_c) / width, start.q_int, start.q_ext, start.background.amplitude,
      start.background.phase - units::two_pi * (start.f_r_hz - f_c) * start.background.delay_s,
      start.background.delay_s * width;

  auto unpack = [&](const Eigen::VectorXd& p) {
    ModeFit m;
    m.f_r_hz = f_c + width * p[0];
    m.q_int = p[1];
    m.q_ext = p[2];
    m.background.amplitude = p[3];
    m.background.delay_s = p[5] / width;
    m.background.phase = p[4] + units::two_pi * p[0] * p[5];
    return m;
  };

  FitProblem problem;
  problem.initial = p0;
  problem.transforms = {Transform::Identity, Transform::LogPositive, Transform::LogPositive,
                        Transform::LogPositive, Transform::Identity, Transform::Identity};
  problem.options = options;
  problem.residual = [&](const Eigen::VectorXd& p) {
    const ModeFit m = unpack(p);
    Eigen::VectorXd r(2 * static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const Complex e = model_s11(f[i], m) - trace.s11[i];
      r[static_cast<Eigen::Index>(i)] = e.real();
      r[static_cast<Eigen::Index>(n + i)] = e.imag();
    }
    return r;
  };

  const FitResult inner = solve_least_squares(problem);
  const Eigen::VectorXd& p = inner.estimates;

  ResonanceFit out;
  out.mode = unpack(p);
  out.mode.background.phase = wrap_phase(out.mode.background.phase);

  const double qi = p[1], qe = p[2];
  const double denom = (qi + qe) * (qi + qe);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(7, 6);
  jac(0, 0) = width;
  jac(1, 1) = 1.0;
  jac(2, 2) = 1.0;
  jac(3, 1) = qe * qe / denom;
  jac(3, 2) = qi * qi / denom;
  jac(4, 3) = 1.0;
  jac(5, 0) = units::two_pi * p[5];
  jac(5, 4) = 1.0;
  jac(5, 5) = units::two_pi * p[0];
  jac(6, 5) = 1.0 / width;

  FitResult& fit = out.fit;
  fit = inner;
  fit.names.assign(std::begin(kResonanceParams), std::end(kResonanceParams));
  fit.estimates.resize(7);
  fit.estimates << out.mode.f_r_hz, qi, qe, out.mode.q_loaded(), out.mode.background.amplitude,
      out.mode.background.phase, out.mode.background.delay_s;
  fit.covariance = jac * inner.covariance * jac.transpose();
  fit.unscaled_covariance = jac * inner.unscaled_covariance * jac.transpose();
  fit.std_errors = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  if (!fit.converged) throw ConvergenceFailure("resonance fit did not converge: " + fit.message, fit);
  return out;
}

double phonon_number(double p_in_w, const ModeFit& mode) {
  if (!(p_in_w >= 0.0) || !std::isfinite(p_in_w)) throw DomainError("phonon_number: power must be >= 0");
  validate(mode);
  const double omega = units::to_angular(mode.f_r_hz);
  const double ql = mode.q_loaded();
  return 4.0 * ql * ql * p_in_w / (mode.q_ext * units::hbar * omega * omega);
}

}  // namespace holeburn
