#include <doctest.h>

#include <cmath>
#include <cstring>

#include "holeburn/models.hpp"
#include "holeburn/synth.hpp"

using namespace holeburn;

namespace {

SynthConfig stm_config() {
  SynthConfig c;
  c.saturation = StmSaturationParams{1e4, 20.0, 1.05, 1e6};
  c.tan_delta = 1e-4;
  c.rabi = RabiScaling{25e3, 0.5};
  c.n_values = log_grid(1e5, 1e8, 13);
  c.detuning_multiples = {-16, -12, -8, -4, -2, 2, 4, 8, 12, 16};
  c.seed = 42;
  return c;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_map(const TwoToneMap& a, const TwoToneMap& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto &x = a.rows[i], &y = b.rows[i];
    if (!same_bits(x.delta_hz, y.delta_hz) || !same_bits(x.n_pump, y.n_pump) || !same_bits(x.inv_q_tls, y.inv_q_tls) ||
        !same_bits(x.inv_q_tls_err, y.inv_q_tls_err) || !same_bits(x.dfreq_hz, y.dfreq_hz) ||
        !same_bits(x.dfreq_err, y.dfreq_err))
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("log grid") {
  const auto g = log_grid(1e5, 1e8, 13);
  REQUIRE(g.size() == 13);
  CHECK(g.front() == 1e5);
  CHECK(g.back() == 1e8);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
}

TEST_CASE("noiseless saturation curve equals the closed form") {
  SynthConfig c = stm_config();
  c.n_values = log_grid(1e-2, 1e7, 30);
  const SaturationCurve curve = synth_saturation(c);
  REQUIRE(curve.rows.size() == 30);
  const ThermalContext ctx{c.pump_hz, c.temperature_k};
  for (const auto& r : curve.rows) CHECK(r.q_int == 1.0 / stm_inverse_q(r.n, *c.saturation, ctx));
}

TEST_CASE("saturation noise is seeded") {
  SynthConfig c = stm_config();
  c.n_values = log_grid(1e-2, 1e7, 30);
  c.noise.q_fraction = 0.01;
  const SaturationCurve a = synth_saturation(c), b = synth_saturation(c);
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(same_bits(a.rows[i].q_int, b.rows[i].q_int));
  c.seed += 1;
  const SaturationCurve d = synth_saturation(c);
  int differ = 0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) differ += a.rows[i].q_int != d.rows[i].q_int;
  CHECK(differ == 30);
}

TEST_CASE("two-tone map structure") {
  SynthConfig c = stm_config();
  c.n_values.insert(c.n_values.begin(), 0.0);
  const TwoToneMap m = synth_twotone(c);
  CHECK(m.rows.size() == 14 * 10);

  const ThermalContext probe{c.pump_hz, c.temperature_k};
  for (const auto& r : m.rows) {
    // every detuning is an exact multiple of the FSR
    const double k = r.delta_hz / c.geometry.fsr_hz;
    CHECK(std::abs(k - std::round(k)) < 1e-15 * std::abs(k));
    if (r.n_pump == 0.0) {
      const double base = thermal_factor({c.pump_hz + r.delta_hz, c.temperature_k}) / c.saturation->q_tls0;
      CHECK(std::abs(r.inv_q_tls - base) <= 1e-15 * base);
      CHECK(r.dfreq_hz == 0.0);
    }
  }
  // +Delta and -Delta: equal loss and opposite shift up to the thermal factor of the probe
  for (const auto& r : m.rows) {
    if (r.delta_hz <= 0) continue;
    for (const auto& s : m.rows) {
      if (s.delta_hz != -r.delta_hz || s.n_pump != r.n_pump) continue;
      const double tp = thermal_factor({c.pump_hz + r.delta_hz, c.temperature_k});
      const double tm = thermal_factor({c.pump_hz - r.delta_hz, c.temperature_k});
      CHECK(std::abs(r.inv_q_tls / tp - s.inv_q_tls / tm) <= 1e-15 * r.inv_q_tls / tp);
      const double fp = (c.pump_hz + r.delta_hz) * tp, fm = (c.pump_hz - r.delta_hz) * tm;
      CHECK(std::abs(r.dfreq_hz / fp + s.dfreq_hz / fm) <= 1e-14 * std::abs(r.dfreq_hz / fp));
    }
  }
}

TEST_CASE("two-tone shift column peaks where Omega = sqrt6 |Delta|") {
  SynthConfig c = stm_config();
  c.detuning_multiples = {-8, -4, -2, 2, 4, 8};
  c.n_values = log_grid(1e5, 1e8, 301);
  const TwoToneMap m = synth_twotone(c);
  for (int k : c.detuning_multiples) {
    const double delta = k * c.geometry.fsr_hz;
    double best_n = 0.0, best = -1.0;
    for (const auto& r : m.rows)
      if (r.delta_hz == delta && std::abs(r.dfreq_hz) > best) best = std::abs(r.dfreq_hz), best_n = r.n_pump;
    const double n_star = std::pow(std::sqrt(6.0) * std::abs(delta) / 25e3, 2.0);
    // grid spacing is 1% in n
    CHECK(std::abs(std::log(best_n / n_star)) < 0.012);
  }
}

TEST_CASE("determinism regardless of thread count") {
  SynthConfig c = stm_config();
  c.noise = {0.01, 0.01, 0.01, 0.0};
  const TwoToneMap serial = synth_twotone(c);
  c.threads = 4;
  CHECK(same_map(serial, synth_twotone(c)));
  c.threads = 3;
  CHECK(same_map(serial, synth_twotone(c)));
}

TEST_CASE("uniform-coupling branch") {
  SynthConfig c = stm_config();
  c.twotone_model = TwoToneModel::Capelle;
  c.capelle = CapelleParams{5e3, 2.5e6};
  c.gamma2_exponent = -0.25;
  const TwoToneMap m = synth_twotone(c);
  const double n_c = c.saturation->n_c;
  for (const auto& r : m.rows) {
    const double g2 = 2.5e6 * std::pow(r.n_pump, -0.25);
    CHECK(r.dfreq_hz == capelle_shift(r.delta_hz, r.n_pump / n_c, {5e3, g2}));
  }
}

TEST_CASE("noiseless trace equals the model and traces are seeded") {
  ModeFit m;
  m.f_r_hz = 2e9;
  m.q_int = 1e4;
  m.q_ext = 3e4;
  const ReflectionTrace a = synth_trace(m, 10.0, 64, 0.0, 1);
  for (std::size_t i = 0; i < a.s11.size(); ++i) CHECK(a.s11[i] == model_s11(a.frequencies_hz[i], m));
  const ReflectionTrace b = synth_trace(m, 10.0, 64, 0.01, 9), d = synth_trace(m, 10.0, 64, 0.01, 9);
  for (std::size_t i = 0; i < b.s11.size(); ++i) CHECK(b.s11[i] == d.s11[i]);
}

TEST_CASE("config validation") {
  SynthConfig c = stm_config();
  c.noise.q_fraction = -0.1;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = stm_config();
  c.detuning_multiples.push_back(0);
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = stm_config();
  c.n_values = {1.0, 1.0};
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = stm_config();
  c.n_values.clear();
  CHECK_THROWS_AS(synth_saturation(c), ValidationError);
}
