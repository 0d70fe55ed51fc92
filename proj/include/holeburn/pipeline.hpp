#pragma once

#include <optional>
#include <string>
#include <vector>

#include "holeburn/fitting.hpp"
#include "holeburn/models.hpp"
#include "holeburn/synth.hpp"

namespace holeburn {

// ---------------------------------------------------------------------------
// Single-mode saturation
// ---------------------------------------------------------------------------

struct SaturationFitOptions {
  std::optional<double> fixed_beta;
  // Residual scatter assumed when judging whether the data constrain n_c. Relative
  // residuals of a noiseless curve are ~0, which would make any knee look resolved.
  double span_noise_floor = 1e-3;
  FitOptions fit;
};

// Parameter names, in order: q_tls0, n_c, beta, q_res.
struct SaturationFit {
  StmSaturationParams params;
  FitResult fit;
  double n_s = 0.0;  // phonon number at which the TLS term has dropped by 90%
};

class InsufficientSpan : public Error {
 public:
  InsufficientSpan(const std::string& what, FitResult result) : Error(what), result_(std::move(result)) {}
  const FitResult& result() const { return result_; }

 private:
  FitResult result_;
};

// Requires >= 6 points spanning >= 2 decades of n > 0. ctx.f_r_hz is the pump mode.
// Throws InsufficientSpan when the n_c standard error exceeds n_c, ConvergenceFailure
// when the optimizer stops early.
SaturationFit fit_saturation(const SaturationCurve& curve, const ThermalContext& ctx,
                             const SaturationFitOptions& options = {});

// ---------------------------------------------------------------------------
// Spectral-hole fits
// ---------------------------------------------------------------------------

enum class HoleModel { Stm, Capelle };
enum class HoleChannel { Loss, Shift };
enum class HoleFitMode { PerPower, Global };

struct HoleFitOptions {
  HoleFitMode mode = HoleFitMode::PerPower;
  bool per_power_shared = false;              // fit tan delta / q_tls0 / Gamma_0 separately per power
  std::optional<double> fixed_loss_shared;    // q_tls0 held fixed
  std::optional<double> fixed_shift_shared;   // tan delta (STM) or Gamma_0 in Hz (uniform coupling) held fixed
  int threads = 1;
  FitOptions fit;
};

struct HoleFitRow {
  double n_pump = 0.0;
  double value = 0.0;   // Omega/2pi (STM) or Gamma_2/2pi (uniform coupling), Hz
  double stderr = 0.0;
  bool converged = false;
  double shared = 0.0;  // per-power shared parameter (equal to the channel's when shared)
  double shared_stderr = 0.0;
};

struct ChannelFit {
  HoleChannel channel = HoleChannel::Loss;
  std::string shared_name;  // q_tls0 | tan_delta | gamma0_hz
  double shared = 0.0;
  double shared_stderr = 0.0;
  std::vector<HoleFitRow> rows;  // ascending n_pump
  std::optional<RabiScaling> global;
  double omega0_stderr = 0.0;
  double k_stderr = 0.0;
  FitResult fit;  // joint fit; with per_power_shared, a summary (no covariance)
  bool converged = false;
};

struct HoleFitSeries {
  HoleModel model = HoleModel::Stm;
  HoleFitMode mode = HoleFitMode::PerPower;
  std::string quantity = "omega_hz";  // omega_hz | gamma2_hz
  std::optional<double> n_c;          // uniform coupling only
  ChannelFit loss;
  ChannelFit shift;
};

// ctx.f_r_hz is the pump mode; probe thermal factors use ctx.f_r_hz + delta.
HoleFitSeries fit_hole_stm(const TwoToneMap& map, const ThermalContext& ctx, const HoleFitOptions& options = {});

// n_c is fixed externally (from the single-mode fit), so n/n_c is not a fit parameter.
HoleFitSeries fit_hole_capelle(const TwoToneMap& map, double n_c, const ThermalContext& ctx,
                               const HoleFitOptions& options = {});

// Omega = Gamma_2 sqrt(1 + n/n_c) per row of a uniform-coupling series.
HoleFitSeries rabi_from_linewidth(const HoleFitSeries& gamma2_series);

// Model prediction for one map cell using a channel's fitted row at that n_pump.
double predict_hole(const HoleFitSeries& series, HoleChannel channel, double delta_hz, double n_pump,
                    const ThermalContext& ctx);

// ---------------------------------------------------------------------------
// Scaling and T2
// ---------------------------------------------------------------------------

struct ScalingFit {
  PowerLawFit loss;
  PowerLawFit shift;
  PowerLawFit reference;  // exponent fixed at 0.5, fitted to the loss channel
};

// Power-law regression of value vs n_pump per channel; rows that did not converge
// or whose value is unidentified (infinite stderr) are skipped. Needs >= 3 usable powers per channel.
ScalingFit extract_scaling(const HoleFitSeries& series);

struct T2Report {
  double t2_s = 0.0;
  double omega0_hz = 0.0;
  double n_c = 0.0;
  std::vector<std::string> assumptions;
};

// Uses scaling.amplitude as Omega_0/2pi and n_c from the saturation fit.
T2Report report_t2(const FitResult& saturation, const PowerLawFit& scaling);

}  // namespace holeburn
