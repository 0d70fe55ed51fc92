#include "holeburn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "holeburn/parallel.hpp"
#include "holeburn/rng.hpp"

namespace holeburn {

namespace {

// Dataset tags for cell_stream keys.
constexpr std::uint64_t kSaturationTag = 1;
constexpr std::uint64_t kTwoToneTag = 2;
constexpr std::uint64_t kTraceTag = 3;

void check(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, int count) {
  check(lo > 0.0 && hi >= lo && std::isfinite(hi), "log grid: endpoints must satisfy 0 < min <= max");
  check(count >= 1, "log grid: count must be >= 1");
  if (count == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

void validate(const SynthConfig& cfg) {
  check(!cfg.n_values.empty(), "synth config: phonon-number grid is empty");
  for (double n : cfg.n_values) check(std::isfinite(n) && n >= 0.0, "synth config: phonon numbers must be >= 0");
  check(strictly_increasing(cfg.n_values), "synth config: phonon numbers must be strictly increasing");
  const auto& nz = cfg.noise;
  check(nz.q_fraction >= 0.0, "noise.q_fraction must be >= 0");
  check(nz.inv_q_fraction >= 0.0, "noise.inv_q_fraction must be >= 0");
  check(nz.shift_fraction >= 0.0, "noise.shift_fraction must be >= 0");
  check(nz.trace_sigma >= 0.0, "noise.trace_sigma must be >= 0");
  check(cfg.pump_hz > 0.0, "synth config: pump_hz must be positive");
  check(cfg.temperature_k >= 0.0, "synth config: temperature_k must be >= 0");
  std::set<int> seen;
  for (int m : cfg.detuning_multiples) {
    check(m != 0, "synth config: detuning multiples must exclude 0");
    check(seen.insert(m).second, "synth config: detuning multiples must be unique");
  }
  if (cfg.saturation) validate(*cfg.saturation);
  if (cfg.rabi) validate(*cfg.rabi);
  if (cfg.capelle) validate(*cfg.capelle);
  if (cfg.tan_delta) check(*cfg.tan_delta > 0.0, "synth config: tan_delta must be positive");
  check(cfg.geometry.fsr_hz > 0.0, "geometry.fsr_hz must be positive");
}

void validate(const SaturationCurve& curve) {
  for (std::size_t i = 0; i < curve.rows.size(); ++i) {
    const auto& r = curve.rows[i];
    check(std::isfinite(r.n) && r.n >= 0.0, "saturation curve: n must be >= 0");
    check(std::isfinite(r.q_int) && r.q_int > 0.0, "saturation curve: q_int must be positive");
    check(std::isfinite(r.q_int_err) && r.q_int_err >= 0.0, "saturation curve: q_int_err must be >= 0");
    if (i > 0) check(r.n > curve.rows[i - 1].n, "saturation curve: n must be strictly increasing");
  }
}

void validate(const TwoToneMap& map) {
  std::set<std::pair<double, double>> cells;
  for (const auto& r : map.rows) {
    check(std::isfinite(r.delta_hz) && r.delta_hz != 0.0, "two-tone map: delta must be nonzero");
    check(std::isfinite(r.n_pump) && r.n_pump >= 0.0, "two-tone map: n_pump must be >= 0");
    check(std::isfinite(r.inv_q_tls) && std::isfinite(r.dfreq_hz), "two-tone map: non-finite observable");
    check(r.inv_q_tls_err >= 0.0 && r.dfreq_err >= 0.0, "two-tone map: errors must be >= 0");
    check(cells.emplace(r.delta_hz, r.n_pump).second, "two-tone map: duplicate (delta, n_pump) cell");
  }
}

SaturationCurve synth_saturation(const SynthConfig& cfg) {
  validate(cfg);
  if (!cfg.saturation) throw ValidationError("synth saturation: config has no saturation parameters");
  const ThermalContext ctx{cfg.pump_hz, cfg.temperature_k};
  SaturationCurve out;
  out.rows.resize(cfg.n_values.size());
  parallel_for(cfg.n_values.size(), cfg.threads, [&](std::size_t i) {
    const double n = cfg.n_values[i];
    const double q = 1.0 / stm_inverse_q(n, *cfg.saturation, ctx);
    SaturationRow row{n, q, 0.0};
    if (cfg.noise.q_fraction > 0.0) {
      auto rng = cell_stream(cfg.seed, {kSaturationTag, i});
      row.q_int = q * (1.0 + cfg.noise.q_fraction * rng.normal());
      row.q_int_err = cfg.noise.q_fraction * q;
    }
    out.rows[i] = row;
  });
  return out;
}

TwoToneMap synth_twotone(const SynthConfig& cfg) {
  validate(cfg);
  if (cfg.detuning_multiples.empty()) throw ValidationError("synth twotone: detuning grid is empty");
  if (!cfg.saturation) throw ValidationError("synth twotone: saturation parameters (q_tls0 baseline) required");
  const bool stm = cfg.twotone_model == TwoToneModel::Stm;
  if (stm && (!cfg.tan_delta || !cfg.rabi))
    throw ValidationError("synth twotone: STM model needs tan_delta and rabi");
  if (!stm && !cfg.capelle) throw ValidationError("synth twotone: uniform-coupling model needs capelle parameters");
  if (!stm && cfg.gamma2_exponent != 0.0 && cfg.n_values.front() <= 0.0)
    throw ValidationError("synth twotone: power-dependent gamma2 needs n > 0");

  std::vector<int> multiples = cfg.detuning_multiples;
  std::sort(multiples.begin(), multiples.end());
  const std::size_t nd = multiples.size(), nn = cfg.n_values.size();
  const auto& sat = *cfg.saturation;

  TwoToneMap out;
  out.rows.resize(nd * nn);
  parallel_for(nd * nn, cfg.threads, [&](std::size_t cell) {
    const std::size_t i = cell / nn, j = cell % nn;
    const double delta = static_cast<double>(multiples[i]) * cfg.geometry.fsr_hz;
    const double n = cfg.n_values[j];
    const ThermalContext probe{cfg.pump_hz + delta, cfg.temperature_k};
    const double baseline = thermal_factor(probe) / sat.q_tls0;
    TwoToneRow row;
    row.delta_hz = delta;
    row.n_pump = n;
    if (stm) {
      const double omega = rabi_from_phonons(n, *cfg.rabi);
      row.inv_q_tls = baseline * (1.0 + stm_two_tone_loss(delta, omega));
      row.dfreq_hz = probe.f_r_hz * stm_two_tone_shift(delta, {*cfg.tan_delta, omega}, probe);
    } else {
      CapelleParams p = *cfg.capelle;
      if (cfg.gamma2_exponent != 0.0) p.gamma2_hz *= std::pow(n, cfg.gamma2_exponent);
      const double n_tilde = n / sat.n_c;
      row.inv_q_tls = baseline * capelle_loss(delta, n_tilde, p);
      row.dfreq_hz = capelle_shift(delta, n_tilde, p);
    }
    out.rows[cell] = row;
  });

  const auto& nz = cfg.noise;
  if (nz.inv_q_fraction > 0.0 || nz.shift_fraction > 0.0) {
    double max_shift = 0.0;
    for (const auto& r : out.rows) max_shift = std::max(max_shift, std::abs(r.dfreq_hz));
    const double shift_sigma = nz.shift_fraction * max_shift;
    parallel_for(out.rows.size(), cfg.threads, [&](std::size_t cell) {
      auto& r = out.rows[cell];
      auto rng = cell_stream(cfg.seed, {kTwoToneTag, cell / nn, cell % nn});
      const double z_loss = rng.normal();
      const double z_shift = rng.normal();
      if (nz.inv_q_fraction > 0.0) {
        r.inv_q_tls_err = nz.inv_q_fraction * r.inv_q_tls;
        r.inv_q_tls += r.inv_q_tls_err * z_loss;
      }
      if (shift_sigma > 0.0) {
        r.dfreq_err = shift_sigma;
        r.dfreq_hz += shift_sigma * z_shift;
      }
    });
  }
  return out;
}

ReflectionTrace synth_trace(const ModeFit& mode, double span_linewidths, int points, double sigma,
                            std::uint64_t seed) {
  validate(mode);
  check(points >= 8, "synth trace: at least 8 points required");
  check(span_linewidths > 0.0, "synth trace: span must be positive");
  check(sigma >= 0.0, "synth trace: sigma must be >= 0");
  const double half = 0.5 * span_linewidths * mode.f_r_hz / mode.q_loaded();
  const double lo = mode.f_r_hz - half, hi = mode.f_r_hz + half;
  ReflectionTrace t;
  t.frequencies_hz.resize(static_cast<std::size_t>(points));
  t.s11.resize(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double f = lo + (hi - lo) * i / (points - 1);
    t.frequencies_hz[k] = f;
    t.s11[k] = model_s11(f, mode);
    if (sigma > 0.0) {
      auto rng = cell_stream(seed, {kTraceTag, k});
      const double re = rng.normal();
      const double im = rng.normal();
      t.s11[k] += Complex(sigma * re, sigma * im);
    }
  }
  return t;
}

}  // namespace holeburn
