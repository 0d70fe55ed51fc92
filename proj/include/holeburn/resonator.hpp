#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "holeburn/fitting.hpp"

namespace holeburn {

using Complex = std::complex<double>;

struct ReflectionTrace {
  std::vector<double> frequencies_hz;  // strictly increasing
  std::vector<Complex> s11;
};

// Complex background of the reflection measurement. The phase is referenced to
// the resonance frequency: B(f) = amplitude * exp(i (phase + 2 pi (f - f_r) delay)).
struct Background {
  double amplitude = 1.0;
  double phase = 0.0;
  double delay_s = 0.0;
};

struct ModeFit {
  double f_r_hz = 0.0;
  double q_int = 0.0;
  double q_ext = 0.0;  // +inf for an uncoupled mode
  Background background;

  double q_loaded() const { return 1.0 / (1.0 / q_int + 1.0 / q_ext); }
};

struct ModeGeometry {
  double fsr_hz = 1.97e6;
  double stopband_center_hz = 2.399e9;
  double stopband_width_hz = 40e6;
  int mode_count = 20;

  std::vector<double> mode_frequencies() const;
};

// Parameter order of ResonanceFit::fit.
inline constexpr const char* kResonanceParams[] = {"f_r_hz", "q_int", "q_ext", "q_loaded",
                                                   "amplitude", "phase", "delay_s"};

struct ResonanceFit {
  ModeFit mode;
  FitResult fit;  // estimates / errors in kResonanceParams order
};

void validate(const ReflectionTrace& trace);
void validate(const ModeFit& mode);
void validate(const ModeGeometry& geometry);

Complex model_s11(double f_hz, const ModeFit& mode);

// Deterministic starting point: delay from the outer 10% of the trace, f_r at the
// deepest point of the background-normalized dip, q_loaded from its half-depth
// width, q_ext from its depth. Throws NoResonance when the dip is within noise.
ModeFit initial_mode_guess(const ReflectionTrace& trace);

ResonanceFit fit_resonance(const ReflectionTrace& trace, const std::optional<ModeFit>& guess = std::nullopt,
                           const FitOptions& options = {});

// Average intracavity phonon number for a resonant drive of power p_in_w:
// n = 4 q_loaded^2 p_in / (q_ext hbar omega_r^2).
double phonon_number(double p_in_w, const ModeFit& mode);

}  // namespace holeburn
