#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "holeburn/models.hpp"
#include "holeburn/resonator.hpp"

namespace holeburn {

enum class TwoToneModel { Stm, Capelle };

struct NoiseModel {
  double q_fraction = 0.0;        // multiplicative Gaussian on Q_int
  double inv_q_fraction = 0.0;    // multiplicative Gaussian on 1/Q_TLS
  double shift_fraction = 0.0;    // additive Gaussian on dfreq, sigma = fraction * max |dfreq| of the map
  double trace_sigma = 0.0;       // additive complex Gaussian per quadrature
};

struct SynthConfig {
  std::optional<StmSaturationParams> saturation;
  TwoToneModel twotone_model = TwoToneModel::Stm;
  std::optional<double> tan_delta;       // STM two-tone
  std::optional<RabiScaling> rabi;       // STM two-tone
  std::optional<CapelleParams> capelle;  // uniform-coupling two-tone
  double gamma2_exponent = 0.0;          // Gamma_2(n) = gamma2 * n^exponent
  ModeGeometry geometry;
  double pump_hz = 2.399e9;
  double temperature_k = 0.010;
  std::vector<double> n_values;          // phonon-number grid, strictly increasing
  std::vector<int> detuning_multiples;   // signed FSR multiples, nonzero
  NoiseModel noise;
  std::uint64_t seed = 0;
  int threads = 1;                       // never changes the output
};

// Log-spaced grid from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

struct SaturationRow {
  double n = 0.0;
  double q_int = 0.0;
  double q_int_err = 0.0;  // 0 = not given
};

struct SaturationCurve {
  std::vector<SaturationRow> rows;
};

struct TwoToneRow {
  double delta_hz = 0.0;
  double n_pump = 0.0;
  double inv_q_tls = 0.0;
  double inv_q_tls_err = 0.0;  // 0 = not given
  double dfreq_hz = 0.0;
  double dfreq_err = 0.0;      // 0 = not given
};

struct TwoToneMap {
  std::vector<TwoToneRow> rows;  // sorted by delta, then n_pump
};

void validate(const SynthConfig& cfg);
void validate(const SaturationCurve& curve);
void validate(const TwoToneMap& map);

SaturationCurve synth_saturation(const SynthConfig& cfg);
TwoToneMap synth_twotone(const SynthConfig& cfg);

// Uniform grid of `points` samples over span_linewidths * f_r / q_loaded centered on f_r.
ReflectionTrace synth_trace(const ModeFit& mode, double span_linewidths, int points, double sigma,
                            std::uint64_t seed);

}  // namespace holeburn
