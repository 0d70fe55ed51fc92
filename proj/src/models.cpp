#include "holeburn/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "holeburn/errors.hpp"
#include "holeburn/units.hpp"

namespace holeburn {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw DomainError(what);
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void validate(const ThermalContext& ctx) {
  require(positive_finite(ctx.f_r_hz), "thermal context: f_r must be positive");
  require(std::isfinite(ctx.temperature_k) && ctx.temperature_k >= 0.0,
          "thermal context: temperature must be >= 0");
}

void validate(const StmSaturationParams& p) {
  require(positive_finite(p.q_tls0), "saturation params: q_tls0 must be positive");
  require(positive_finite(p.n_c), "saturation params: n_c must be positive");
  require(positive_finite(p.beta), "saturation params: beta must be positive");
  if (p.q_res) require(*p.q_res > 0.0 && !std::isnan(*p.q_res), "saturation params: q_res must be positive");
}

void validate(const TwoToneStmParams& p) {
  require(positive_finite(p.tan_delta), "two-tone params: tan_delta must be positive");
  require(std::isfinite(p.omega_hz) && p.omega_hz >= 0.0, "two-tone params: omega must be >= 0");
}

void validate(const CapelleParams& p) {
  require(positive_finite(p.gamma0_hz), "uniform-coupling params: gamma0 must be positive");
  require(positive_finite(p.gamma2_hz), "uniform-coupling params: gamma2 must be positive");
}

void validate(const RabiScaling& s) {
  require(positive_finite(s.omega0_hz), "rabi scaling: omega0 must be positive");
  require(std::isfinite(s.k) && s.k > 0.0 && s.k < 1.0, "rabi scaling: k must lie in (0, 1)");
}

double thermal_factor(const ThermalContext& ctx) {
  validate(ctx);
  if (ctx.temperature_k == 0.0) return 1.0;
  const double arg = units::hbar * units::to_angular(ctx.f_r_hz) /
                     (2.0 * units::boltzmann * ctx.temperature_k);
  return std::tanh(arg);
}

double stm_inverse_q(double n, const StmSaturationParams& p, const ThermalContext& ctx) {
  if (!(n >= 0.0)) throw DomainError("stm_inverse_q: phonon number must be >= 0");
  validate(p);
  const double tls = thermal_factor(ctx) / p.q_tls0 /
                     std::sqrt(1.0 + std::pow(n / p.n_c, p.beta));
  const double residual = p.q_res ? 1.0 / *p.q_res : 0.0;
  return tls + residual;
}

namespace detail {

double shift_kernel(double delta, double omega) {
  if (delta == 0.0) return 0.0;
  const double ad = std::abs(delta);
  if (ad >= omega) {
    // (s-1)(s+1) = Omega^2 / 2 Delta^2, so the ratio is q / (2 (1+s)^2), q = Omega/Delta.
    const double q = omega / delta;
    const double s = std::sqrt(1.0 + 0.5 * q * q);
    return 0.5 * q / ((1.0 + s) * (1.0 + s));
  }
  const double r = delta / omega;
  const double root = std::sqrt(1.0 + 2.0 * r * r) + std::numbers::sqrt2 * std::abs(r);
  return r / (root * root);
}

double two_tone_loss_series(double y) {
  double sum = 0.0;
  double yk = y;
  for (int k = 1; k < 4000; ++k) {
    const double term = yk / ((2.0 * k + 1.0) * (2.0 * k + 3.0));
    sum += term;
    if (term <= 1e-17 * sum) break;
    yk *= y;
  }
  return -6.0 * sum;
}

double two_tone_loss_closed(double r) {
  const double r2 = r * r;
  if (r2 == 0.0) return -1.0;
  const double x = std::sqrt(1.0 + 2.0 * r2);
  // ln((X-1)/(X+1)) with X-1 = 2 r^2 / (X+1).
  const double log_ratio = std::log(2.0) + 2.0 * std::log(r) - 2.0 * std::log1p(x);
  return -1.0 - r2 * (6.0 + 3.0 * x * log_ratio);
}

}  // namespace detail

double stm_two_tone_shift(double delta_hz, const TwoToneStmParams& p, const ThermalContext& ctx) {
  validate(p);
  if (!std::isfinite(delta_hz)) throw DomainError("stm_two_tone_shift: detuning must be finite");
  if (delta_hz == 0.0 && p.omega_hz == 0.0)
    throw DomainError("stm_two_tone_shift: detuning and Rabi frequency both zero");
  constexpr double prefactor = 3.0 * std::numbers::sqrt2 / 8.0;
  return -thermal_factor(ctx) * prefactor * p.tan_delta * detail::shift_kernel(delta_hz, p.omega_hz);
}

double stm_two_tone_loss(double delta_hz, double omega_hz, const TwoToneLossOptions& opts) {
  if (!(omega_hz >= 0.0) || !std::isfinite(omega_hz))
    throw DomainError("stm_two_tone_loss: Rabi frequency must be >= 0");
  if (!std::isfinite(delta_hz)) throw DomainError("stm_two_tone_loss: detuning must be finite");
  if (delta_hz == 0.0 && omega_hz == 0.0)
    throw DomainError("stm_two_tone_loss: detuning and Rabi frequency both zero");
  if (delta_hz == 0.0) return -1.0;
  if (omega_hz == 0.0) return 0.0;

  const double ad = std::abs(delta_hz);
  if (omega_hz < opts.series_ratio_threshold * ad) {
    const double q = omega_hz / ad;
    return detail::two_tone_loss_series(q * q / (q * q + 2.0));
  }
  return detail::two_tone_loss_closed(ad / omega_hz);
}

double capelle_shift(double delta_hz, double n_tilde, const CapelleParams& p) {
  if (!(n_tilde >= 0.0)) throw DomainError("capelle_shift: scaled phonon number must be >= 0");
  validate(p);
  const double d = delta_hz / p.gamma2_hz;
  const double a = std::sqrt(1.0 + n_tilde);
  const double b = 1.0 + a;
  return -0.5 * p.gamma0_hz * d * n_tilde / (a * (d * d + b * b));
}

double capelle_loss(double delta_hz, double n_tilde, const CapelleParams& p) {
  if (!(n_tilde >= 0.0)) throw DomainError("capelle_loss: scaled phonon number must be >= 0");
  validate(p);
  const double d = std::abs(delta_hz) / p.gamma2_hz;
  const double a = std::sqrt(1.0 + n_tilde);
  const double b = 1.0 + a;
  // 1 - n(1+a) / (a (d^2 + b^2)) with n = (a-1)(a+1), collected over a common denominator.
  if (d > b) {
    const double u = (b / d) * (b / d);
    return (a + u) / (a * (1.0 + u));
  }
  return (a * d * d + b * b) / (a * (d * d + b * b));
}

double rabi_from_phonons(double n, const RabiScaling& s) {
  if (!(n >= 0.0)) throw DomainError("rabi_from_phonons: phonon number must be >= 0");
  validate(s);
  return s.omega0_hz * std::pow(n, s.k);
}

double rabi_capelle(double n_tilde, double gamma2_hz) {
  if (!(n_tilde >= 0.0)) throw DomainError("rabi_capelle: scaled phonon number must be >= 0");
  if (!positive_finite(gamma2_hz)) throw DomainError("rabi_capelle: gamma2 must be positive");
  return gamma2_hz * std::sqrt(1.0 + n_tilde);
}

double t2_estimate(double omega0_hz, double n_c) {
  if (!positive_finite(omega0_hz) || !positive_finite(n_c))
    throw DomainError("t2_estimate: omega0 and n_c must be positive");
  return std::numbers::sqrt2 / (units::to_angular(omega0_hz) * std::sqrt(n_c));
}

}  // namespace holeburn
