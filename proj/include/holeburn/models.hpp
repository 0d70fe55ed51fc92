#pragma once

#include <optional>

#include "holeburn/errors.hpp"

// Closed-form TLS loss and frequency-shift models.
//
// Every frequency crossing this interface is an ordinary frequency in Hz; the
// two-tone expressions only ever see ratios, and the few places that need
// angular frequency go through units::to_angular.
namespace holeburn {

struct ThermalContext {
  double f_r_hz = 0.0;          // mode frequency the thermal factor is evaluated at
  double temperature_k = 0.0;   // bath temperature; 0 means tanh(...) = 1
};

// Single-mode saturation law parameters. An empty q_res means no residual loss.
struct StmSaturationParams {
  double q_tls0 = 0.0;
  double n_c = 0.0;
  double beta = 1.0;
  std::optional<double> q_res;
};

struct TwoToneStmParams {
  double tan_delta = 0.0;
  double omega_hz = 0.0;  // effective Rabi frequency / 2pi
};

// Uniform-coupling model: maximal TLS damping and intrinsic TLS linewidth, both / 2pi.
struct CapelleParams {
  double gamma0_hz = 0.0;
  double gamma2_hz = 0.0;
};

// Omega(n) = omega0 * n^k, omega0 in Hz (Omega_0 / 2pi).
struct RabiScaling {
  double omega0_hz = 0.0;
  double k = 0.5;
};

struct TwoToneLossOptions {
  // Omega/|Delta| below which the loss is summed as a series in
  // y = Omega^2 / (Omega^2 + 2 Delta^2). The closed form loses digits as the
  // ratio shrinks; the series has same-sign terms and converges for y <= 1/3
  // in under 40 terms at the default.
  double series_ratio_threshold = 1.0;
};

void validate(const ThermalContext& ctx);
void validate(const StmSaturationParams& p);
void validate(const TwoToneStmParams& p);
void validate(const CapelleParams& p);
void validate(const RabiScaling& s);

// tanh(hbar omega_r / 2 k_B T), exactly 1 at T = 0.
double thermal_factor(const ThermalContext& ctx);

// 1/Q_int(n) = tanh(...) / (q_tls0 sqrt(1 + (n/n_c)^beta)) + 1/q_res.
double stm_inverse_q(double n, const StmSaturationParams& p, const ThermalContext& ctx);

// Relative probe shift Delta omega_r / omega_r under a detuned pump. Odd in delta.
double stm_two_tone_shift(double delta_hz, const TwoToneStmParams& p, const ThermalContext& ctx);

// delta(1/Q_TLS) Q_TLS / tanh(...), in [-1, 0]. Even in delta.
double stm_two_tone_loss(double delta_hz, double omega_hz, const TwoToneLossOptions& opts = {});

// Uniform-coupling probe shift (same unit as gamma0) and normalized loss Gamma_int / Gamma_0.
double capelle_shift(double delta_hz, double n_tilde, const CapelleParams& p);
double capelle_loss(double delta_hz, double n_tilde, const CapelleParams& p);

double rabi_from_phonons(double n, const RabiScaling& s);
double rabi_capelle(double n_tilde, double gamma2_hz);

// T2 from n/n_C = Omega^2 T1 T2 with Omega = Omega_0 sqrt(n) and T2 = 2 T1.
double t2_estimate(double omega0_hz, double n_c);

namespace detail {

// (Delta/Omega)(s-1)/(s+1), s = sqrt(1 + Omega^2 / 2 Delta^2).
double shift_kernel(double delta, double omega);

// -6 sum_{k>=1} y^k / ((2k+1)(2k+3)); the two-tone loss as a function of
// y = Omega^2 / (Omega^2 + 2 Delta^2).
double two_tone_loss_series(double y);

// Closed-form two-tone loss at r = |Delta| / Omega.
double two_tone_loss_closed(double r);

}  // namespace detail

}  // namespace holeburn
