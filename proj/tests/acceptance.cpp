// Acceptance criteria 1-10: one PASS/FAIL line each; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <unistd.h>

#include "holeburn/cli.hpp"
#include "holeburn/config.hpp"
#include "holeburn/io.hpp"
#include "holeburn/pipeline.hpp"
#include "holeburn/resonator.hpp"
#include "oracle.hpp"

using namespace holeburn;
namespace fs = std::filesystem;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

const ThermalContext kPump{2.399e9, 0.010};

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

SynthConfig hole_config(double k, std::uint64_t seed) {
  SynthConfig c;
  c.saturation = StmSaturationParams{1e4, 20.0, 1.05, 1e6};
  c.tan_delta = 1e-4;
  c.rabi = RabiScaling{25e3, k};
  c.n_values = log_grid(1e5, 1e8, 13);
  c.detuning_multiples = {-16, -12, -8, -4, -2, 2, 4, 8, 12, 16};
  c.noise.inv_q_fraction = 0.01;
  c.noise.shift_fraction = 0.01;
  c.seed = seed;
  return c;
}

Outcome beta_round_trip() {
  Outcome o;
  SynthConfig c;
  c.saturation = StmSaturationParams{1e4, 20.0, 1.05, 1e6};
  c.n_values = log_grid(1e-2, 1e7, 30);
  const SaturationFit f = fit_saturation(synth_saturation(c), kPump);
  double worst = std::max({rel(f.params.beta, 1.05), rel(f.params.q_tls0, 1e4), rel(f.params.n_c, 20.0),
                           rel(*f.params.q_res, 1e6)});
  o.require(worst < 1e-3, "noiseless worst relative error " + fmt("%.3g", worst));
  c.noise.q_fraction = 0.01;
  double max_dev = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    c.seed = seed;
    max_dev = std::max(max_dev, std::abs(fit_saturation(synth_saturation(c), kPump).params.beta - 1.05));
  }
  o.require(max_dev <= 0.05, "max |beta - 1.05| over 100 seeds " + fmt("%.4f", max_dev));
  o.detail = o.pass ? "noiseless worst rel " + fmt("%.2g", worst) + ", noisy max |dbeta| " + fmt("%.4f", max_dev) : o.detail;
  return o;
}

Outcome scaling_round_trip(double k) {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ScalingFit s = extract_scaling(fit_hole_stm(synth_twotone(hole_config(k, seed)), kPump));
    worst = std::max({worst, std::abs(s.loss.exponent - k), std::abs(s.shift.exponent - k)});
  }
  o.require(worst <= 0.02, "max |k - " + fmt("%.2f", k) + "| " + fmt("%.4f", worst));
  if (o.pass) o.detail = "20 seeds, both channels, max |dk| " + fmt("%.4f", worst);
  return o;
}

Outcome peak_shift() {
  Outcome o;
  const double td = 1e-4;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double worst_arg = 0.0, worst_val = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double delta = std::pow(10.0, 3.0 + 5.0 * i / 9.0);
    auto f = [&](double lw) { return std::abs(stm_two_tone_shift(delta, {td, std::exp(lw)}, kPump)); };
    double a = std::log(delta * 1e-2), b = std::log(delta * 1e2);
    double c = b - g * (b - a), d = a + g * (b - a), fc = f(c), fd = f(d);
    while (b - a > 1e-14 * std::abs(a + b)) {
      if (fc > fd) b = d, d = c, fd = fc, c = b - g * (b - a), fc = f(c);
      else a = c, c = d, fc = fd, d = a + g * (b - a), fd = f(d);
    }
    const double best = std::exp(0.5 * (a + b));
    worst_arg = std::max(worst_arg, rel(best / delta, std::sqrt(6.0)));
    worst_val = std::max(worst_val, rel(f(0.5 * (a + b)), std::sqrt(3.0) / 24.0 * td * thermal_factor(kPump)));
  }
  o.require(worst_arg < 1e-6, "argmax rel error " + fmt("%.3g", worst_arg));
  o.require(worst_val < 1e-9, "peak value rel error " + fmt("%.3g", worst_val));
  if (o.pass) o.detail = "argmax rel " + fmt("%.2g", worst_arg) + ", value rel " + fmt("%.2g", worst_val);
  return o;
}

Outcome zero_detuning() {
  Outcome o;
  for (double omega : {1e3, 1e5, 1e7})
    for (double delta : {0.0, 1e-12 * omega, 1e-9 * omega})
      o.require(std::abs(stm_two_tone_loss(delta, omega) + 1.0) < 1e-9, "loss limit at delta=" + fmt("%g", delta));
  double worst = 0.0;
  const StmSaturationParams tls_only{1.0, 1.0, 1.0, std::nullopt};
  for (int i = 0; i <= 120; ++i) {
    const double nt = std::pow(10.0, -6.0 + 12.0 * i / 120.0);
    const double want = 1.0 / std::sqrt(1.0 + nt);
    worst = std::max(worst, rel(capelle_loss(0.0, nt, {1.0, 1.0}), want));
    worst = std::max(worst, rel(capelle_loss(0.0, nt, {1.0, 1.0}), stm_inverse_q(nt, tls_only, {1.0, 0.0})));
  }
  o.require(worst < 1e-12, "uniform-coupling zero-detuning rel error " + fmt("%.3g", worst));
  if (o.pass) o.detail = "loss(0) = -1; worst rel " + fmt("%.2g", worst);
  return o;
}

Outcome cancellation() {
  Outcome o;
  double worst = 0.0, smallest = 0.0;
  for (double ratio : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}) {
    const double delta = 7.88e6;
    const double got = stm_two_tone_loss(delta, ratio * delta);
    const double want =
        oracle::to_double(oracle::two_tone_loss(oracle::Big(delta), oracle::Big(delta) * oracle::Big(ratio)));
    worst = std::max(worst, rel(got, want));
    if (ratio == 1e-4) smallest = got;
  }
  o.require(worst < 1e-10, "worst rel error vs oracle " + fmt("%.3g", worst));
  o.require(std::abs(smallest) <= 1e-6, "|loss| at ratio 1e-4 = " + fmt("%.3g", smallest));
  if (o.pass) o.detail = "worst rel " + fmt("%.2g", worst) + ", loss at 1e-4 " + fmt("%.3g", smallest);
  return o;
}

Outcome gamma2_round_trip() {
  Outcome o;
  double worst_g = 0.0, worst_o = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthConfig c = hole_config(0.5, seed);
    c.twotone_model = TwoToneModel::Capelle;
    c.saturation->beta = 1.0;
    c.capelle = CapelleParams{5e3, 2.5e6};
    c.gamma2_exponent = -0.25;
    const HoleFitSeries s = fit_hole_capelle(synth_twotone(c), 20.0, kPump);
    const ScalingFit g = extract_scaling(s);
    const ScalingFit w = extract_scaling(rabi_from_linewidth(s));
    worst_g = std::max({worst_g, std::abs(g.loss.exponent + 0.25), std::abs(g.shift.exponent + 0.25)});
    worst_o = std::max({worst_o, std::abs(w.loss.exponent - 0.25), std::abs(w.shift.exponent - 0.25)});
  }
  o.require(worst_g <= 0.02, "Gamma_2 exponent max dev " + fmt("%.4f", worst_g));
  o.require(worst_o <= 0.02, "Omega exponent max dev " + fmt("%.4f", worst_o));
  if (o.pass) o.detail = "10 seeds, max dev Gamma_2 " + fmt("%.4f", worst_g) + ", Omega " + fmt("%.4f", worst_o);
  return o;
}

Outcome t2_consistency() {
  Outcome o;
  const double omega0 = 2.0 * std::numbers::pi * 25e3, t2 = 2e-6;
  FitResult sat;
  sat.names = {"q_tls0", "n_c", "beta", "q_res"};
  sat.estimates = Eigen::Vector4d(1e4, 2.0 / (omega0 * omega0 * t2 * t2), 1.0, 1e6);
  sat.std_errors = Eigen::Vector4d::Zero();
  const T2Report r = report_t2(sat, PowerLawFit{25e3, 0.5, 0.0, 0.0, 1.0});
  o.require(rel(r.t2_s, 2e-6) < 1e-9, "T2 rel error " + fmt("%.3g", rel(r.t2_s, 2e-6)));
  o.require(r.assumptions == std::vector<std::string>{"k=0.5 forced", "T2=2*T1"}, "assumption ledger mismatch");
  if (o.pass) o.detail = "T2 = " + fmt("%.12g", r.t2_s) + " s, n_c = " + fmt("%.5g", sat.estimates[1]);
  return o;
}

Outcome resonance_round_trip() {
  Outcome o;
  ModeFit truth;
  truth.f_r_hz = 2.399e9;
  truth.q_int = 1e4;
  truth.q_ext = 2e4;
  truth.background = {0.8, 0.4, 3e-9};
  const ResonanceFit r = fit_resonance(synth_trace(truth, 20.0, 400, 0.0, 1));
  const double worst = std::max({rel(r.mode.f_r_hz, truth.f_r_hz), rel(r.mode.q_int, truth.q_int),
                                 rel(r.mode.q_ext, truth.q_ext)});
  o.require(worst < 1e-6, "noiseless worst rel " + fmt("%.3g", worst));
  double worst_q = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed)
    worst_q = std::max(worst_q, rel(fit_resonance(synth_trace(truth, 20.0, 400, 0.01, seed)).mode.q_int, truth.q_int));
  o.require(worst_q < 0.05, "noisy worst q_int rel " + fmt("%.4f", worst_q));
  if (o.pass) o.detail = "noiseless worst rel " + fmt("%.2g", worst) + ", noisy worst q_int rel " + fmt("%.4f", worst_q);
  return o;
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

Outcome determinism() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / ("holeburn_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const std::string& name) { return (dir / name).string(); };

  write_file_atomic(p("stm.json"), config::to_json(config::SynthRun{hole_config(0.5, 11), std::nullopt}).dump(2));
  SynthConfig sat;
  sat.saturation = StmSaturationParams{1e4, 20.0, 1.05, 1e6};
  sat.n_values = log_grid(1e-2, 1e7, 30);
  sat.noise.q_fraction = 0.01;
  sat.seed = 5;
  write_file_atomic(p("sat.json"), config::to_json(config::SynthRun{sat, std::nullopt}).dump(2));
  config::TraceSpec trace;
  trace.mode.f_r_hz = 2.399e9;
  trace.mode.q_int = 1e4;
  trace.mode.q_ext = 2e4;
  SynthConfig tr;
  tr.noise.trace_sigma = 0.01;
  tr.seed = 2;
  write_file_atomic(p("trace.json"), config::to_json(config::SynthRun{tr, trace}).dump(2));

  const std::vector<std::pair<std::string, std::string>> jobs{{"twotone", "stm"}, {"saturation", "sat"}, {"trace", "trace"}};
  for (const auto& [kind, stem] : jobs) {
    for (const char* suffix : {"_1", "_2", "_par"}) {
      std::vector<std::string> args{"synth", kind, "--config", p(stem + ".json"), "--output", p(stem + suffix + ".csv")};
      if (std::string(suffix) == "_par") args.insert(args.end(), {"--threads", "4"});
      o.require(cli(args) == 0, "synth " + kind + " failed");
    }
    for (const char* ext : {".csv", ".json"}) {
      const std::string base = read_file(p(stem + "_1" + ext));
      o.require(base == read_file(p(stem + "_2" + ext)), "synth " + kind + " rerun differs (" + ext + ")");
      o.require(base == read_file(p(stem + "_par" + ext)), "synth " + kind + " parallel differs (" + ext + ")");
    }
  }

  o.require(cli({"fit", "hole-stm", p("stm_1.csv"), "--output", p("h1.json")}) == 0, "hole fit failed");
  o.require(cli({"fit", "hole-stm", p("stm_1.csv"), "--output", p("h4.json"), "--threads", "4"}) == 0, "hole fit failed");
  o.require(read_file(p("h1.json")) == read_file(p("h4.json")), "parallel hole fit differs from serial");
  o.require(cli({"fit", "saturation", p("sat_1.csv"), "--output", p("s.json")}) == 0, "saturation fit failed");
  o.require(cli({"fit", "resonance", p("trace_1.csv"), "--output", p("r.json")}) == 0, "resonance fit failed");

  for (const char* out : {"rep1", "rep2"})
    o.require(cli({"report", "--svg", "--output", p(out), p("s.json"), p("h1.json"), p("r.json"), p("sat_1.csv"),
                   p("stm_1.csv"), p("trace_1.csv")}) == 0,
              "report failed");
  int files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "rep1")) {
    ++files;
    const auto other = dir / "rep2" / entry.path().filename();
    o.require(fs::exists(other) && read_file(entry.path()) == read_file(other),
              "report file " + entry.path().filename().string() + " differs");
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = "3 synth kinds x (rerun, 4 threads), parallel hole fit, " + std::to_string(files) + " report files";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget_s;
  };
  const std::vector<Criterion> criteria{
      {1, "beta round trip", beta_round_trip, 5.0},
      {2, "STM scaling round trip (k=0.5)", [] { return scaling_round_trip(0.5); }, 10.0},
      {3, "anomalous scaling round trip (k=0.3)", [] { return scaling_round_trip(0.3); }, 10.0},
      {4, "peak-shift identity", peak_shift, 0.0},
      {5, "zero-detuning limits", zero_detuning, 0.0},
      {6, "cancellation-safe regime", cancellation, 0.0},
      {7, "Gamma_2 scaling round trip", gamma2_round_trip, 0.0},
      {8, "T2 consistency", t2_consistency, 0.0},
      {9, "resonance fit round trip", resonance_round_trip, 0.0},
      {10, "determinism suite", determinism, 0.0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && s > c.budget_s) o.require(false, "runtime " + fmt("%.2f", s) + " s over budget");
    failed += !o.pass;
    std::printf("[%s] criterion %2d: %s (%.2f s) %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, s, o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
