#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "holeburn/cli.hpp"
#include "holeburn/config.hpp"
#include "holeburn/io.hpp"
#include "holeburn/pipeline.hpp"
#include "holeburn/resonator.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace holeburn;

namespace {

// Fit results cross the boundary as the same JSON documents the CLI writes.
py::object to_python(const config::Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

config::Json from_python(const py::object& o) {
  if (py::isinstance<py::str>(o)) return config::parse_json_text(o.cast<std::string>());
  return config::parse_json_text(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

config::Json fit_echo(double pump_hz, double temperature_k) {
  return {{"pump_hz", pump_hz}, {"temperature_k", temperature_k}};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "TLS spectral hole-burning models, fits and synthetic data";

  static py::exception<Error> base(m, "HoleburnError");
  static py::exception<ConvergenceFailure> conv(m, "ConvergenceFailure", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConvergenceFailure& e) {
      py::set_error(conv, e.what());
    } catch (const InsufficientSpan& e) {
      py::set_error(conv, e.what());
    } catch (const ValidationError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DomainError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  m.def("thermal_factor", [](double f_r_hz, double temperature_k) { return thermal_factor({f_r_hz, temperature_k}); },
        "f_r_hz"_a, "temperature_k"_a);
  m.def(
      "stm_inverse_q",
      [](double n, double q_tls0, double n_c, double beta, std::optional<double> q_res, double f_r_hz, double t) {
        return stm_inverse_q(n, {q_tls0, n_c, beta, q_res}, {f_r_hz, t});
      },
      "n"_a, "q_tls0"_a, "n_c"_a, "beta"_a = 1.0, "q_res"_a = py::none(), "f_r_hz"_a = 2.399e9,
      "temperature_k"_a = 0.0);
  m.def(
      "stm_two_tone_shift",
      [](double delta_hz, double tan_delta, double omega_hz, double f_r_hz, double t) {
        return stm_two_tone_shift(delta_hz, {tan_delta, omega_hz}, {f_r_hz, t});
      },
      "delta_hz"_a, "tan_delta"_a, "omega_hz"_a, "f_r_hz"_a = 2.399e9, "temperature_k"_a = 0.0);
  m.def("stm_two_tone_loss", [](double delta_hz, double omega_hz) { return stm_two_tone_loss(delta_hz, omega_hz); },
        "delta_hz"_a, "omega_hz"_a);
  m.def(
      "capelle_shift",
      [](double delta_hz, double n_tilde, double gamma0_hz, double gamma2_hz) {
        return capelle_shift(delta_hz, n_tilde, {gamma0_hz, gamma2_hz});
      },
      "delta_hz"_a, "n_tilde"_a, "gamma0_hz"_a, "gamma2_hz"_a);
  m.def(
      "capelle_loss",
      [](double delta_hz, double n_tilde, double gamma2_hz) { return capelle_loss(delta_hz, n_tilde, {1.0, gamma2_hz}); },
      "delta_hz"_a, "n_tilde"_a, "gamma2_hz"_a);
  m.def("rabi_from_phonons", [](double n, double omega0_hz, double k) { return rabi_from_phonons(n, {omega0_hz, k}); },
        "n"_a, "omega0_hz"_a, "k"_a = 0.5);
  m.def("rabi_capelle", &rabi_capelle, "n_tilde"_a, "gamma2_hz"_a);
  m.def("t2_estimate", &t2_estimate, "omega0_hz"_a, "n_c"_a);

  m.def(
      "model_s11",
      [](double f_hz, double f_r_hz, double q_int, double q_ext, double amplitude, double phase, double delay_s) {
        ModeFit mode{f_r_hz, q_int, q_ext, {amplitude, phase, delay_s}};
        return model_s11(f_hz, mode);
      },
      "f_hz"_a, "f_r_hz"_a, "q_int"_a, "q_ext"_a, "amplitude"_a = 1.0, "phase"_a = 0.0, "delay_s"_a = 0.0);
  m.def(
      "phonon_number",
      [](double p_in_w, double f_r_hz, double q_int, double q_ext) {
        ModeFit mode;
        mode.f_r_hz = f_r_hz;
        mode.q_int = q_int;
        mode.q_ext = q_ext;
        return phonon_number(p_in_w, mode);
      },
      "p_in_w"_a, "f_r_hz"_a, "q_int"_a, "q_ext"_a);

  m.def(
      "powerlaw_fit",
      [](std::vector<double> x, std::vector<double> y, std::vector<double> y_err) {
        const PowerLawFit f = powerlaw_fit(x, y, y_err);
        return py::dict("amplitude"_a = f.amplitude, "exponent"_a = f.exponent,
                        "amplitude_stderr"_a = f.amplitude_stderr, "exponent_stderr"_a = f.exponent_stderr,
                        "r_squared"_a = f.r_squared);
      },
      "x"_a, "y"_a, "y_err"_a = std::vector<double>{});

  m.def(
      "synth",
      [](const std::string& kind, const py::object& cfg, std::optional<std::uint64_t> seed) {
        config::SynthRun run = config::parse_synth(from_python(cfg));
        if (seed) run.synth.seed = *seed;
        if (kind == "saturation") return csv::to_csv(synth_saturation(run.synth));
        if (kind == "twotone") return csv::to_csv(synth_twotone(run.synth));
        if (kind == "trace") {
          if (!run.trace) throw ValidationError("synth trace: config needs a 'trace' section");
          return csv::to_csv(synth_trace(run.trace->mode, run.trace->span_linewidths, run.trace->points,
                                         run.synth.noise.trace_sigma, run.synth.seed));
        }
        throw ValidationError("synth: kind must be saturation, twotone or trace");
      },
      "kind"_a, "config"_a, "seed"_a = py::none(), "Generate a dataset; returns its CSV text.");

  m.def(
      "fit_saturation",
      [](const std::string& csv_text, double pump_hz, double temperature_k, std::optional<double> fix_beta) {
        SaturationFitOptions opts;
        opts.fixed_beta = fix_beta;
        const SaturationFit f = fit_saturation(csv::parse_saturation(csv_text), {pump_hz, temperature_k}, opts);
        auto doc = config::fit_document("saturation", f.fit, fit_echo(pump_hz, temperature_k));
        doc["derived"] = {{"n_s", f.n_s}};
        return to_python(doc);
      },
      "csv_text"_a, "pump_hz"_a = 2.399e9, "temperature_k"_a = 0.010, "fix_beta"_a = py::none());

  m.def(
      "fit_resonance",
      [](const std::string& csv_text) {
        return to_python(config::fit_document("resonance", fit_resonance(csv::parse_trace(csv_text)).fit, {}));
      },
      "csv_text"_a);

  m.def(
      "fit_hole_stm",
      [](const std::string& csv_text, double pump_hz, double temperature_k, bool global, bool per_power_tan_delta,
         int threads) {
        HoleFitOptions opts;
        opts.mode = global ? HoleFitMode::Global : HoleFitMode::PerPower;
        opts.per_power_shared = per_power_tan_delta;
        opts.threads = threads;
        const auto s = fit_hole_stm(csv::parse_twotone(csv_text), {pump_hz, temperature_k}, opts);
        return to_python(config::hole_document(s, fit_echo(pump_hz, temperature_k)));
      },
      "csv_text"_a, "pump_hz"_a = 2.399e9, "temperature_k"_a = 0.010, "global_fit"_a = false,
      "per_power_tan_delta"_a = false, "threads"_a = 1);

  m.def(
      "fit_hole_capelle",
      [](const std::string& csv_text, double n_c, double pump_hz, double temperature_k, int threads) {
        HoleFitOptions opts;
        opts.threads = threads;
        const auto s = fit_hole_capelle(csv::parse_twotone(csv_text), n_c, {pump_hz, temperature_k}, opts);
        return to_python(config::hole_document(s, fit_echo(pump_hz, temperature_k)));
      },
      "csv_text"_a, "n_c"_a, "pump_hz"_a = 2.399e9, "temperature_k"_a = 0.010, "threads"_a = 1);

  m.def(
      "extract_scaling",
      [](const py::object& hole_doc) {
        const ScalingFit s = extract_scaling(config::hole_series_from(from_python(hole_doc)));
        auto pl = [](const PowerLawFit& f) {
          return py::dict("amplitude"_a = f.amplitude, "exponent"_a = f.exponent,
                          "exponent_stderr"_a = f.exponent_stderr);
        };
        return py::dict("loss"_a = pl(s.loss), "shift"_a = pl(s.shift), "reference"_a = pl(s.reference));
      },
      "hole_document"_a);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      "args"_a, "Run a command-line invocation in-process; returns (exit_code, stdout, stderr).");
}
