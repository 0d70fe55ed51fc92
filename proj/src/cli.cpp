#include "holeburn/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <optional>
#include <ostream>

#include "holeburn/config.hpp"
#include "holeburn/io.hpp"
#include "holeburn/report.hpp"

namespace holeburn::cli {

namespace {

namespace fs = std::filesystem;
using config::Json;

struct SynthArgs {
  std::string kind, config, output;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

struct FitArgs {
  std::string kind, input, output, config;
  std::optional<double> n_c, fix_beta;
  bool per_power_tan_delta = false, global = false;
  int threads = 1;
};

struct ReportArgs {
  std::string output;
  std::vector<std::string> inputs;
  bool svg = false;
};

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

fs::path sidecar_path(const fs::path& output) {
  fs::path p = output;
  p.replace_extension(".json");
  if (p == output) p += ".json";
  return p;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  config::SynthRun run = config::parse_synth(config::parse_json_text(read_file(a.config)));
  if (a.seed) run.synth.seed = *a.seed;
  run.synth.threads = a.threads;

  std::string data;
  if (a.kind == "saturation") {
    if (!run.synth.saturation) throw ValidationError("synth saturation: config needs a 'saturation' section");
    data = csv::to_csv(synth_saturation(run.synth));
  } else if (a.kind == "twotone") {
    data = csv::to_csv(synth_twotone(run.synth));
  } else {
    if (!run.trace) throw ValidationError("synth trace: config needs a 'trace' section");
    data = csv::to_csv(synth_trace(run.trace->mode, run.trace->span_linewidths, run.trace->points,
                                   run.synth.noise.trace_sigma, run.synth.seed));
  }
  Json side;
  side["kind"] = a.kind;
  side["config"] = config::to_json(run);
  side["output_fingerprint"] = fingerprint(data);
  write_file_atomic(a.output, data);
  write_file_atomic(sidecar_path(a.output), dump(side));
  out << "wrote " << a.output << "\n";
  return kOk;
}

config::FitRun resolve_fit(const FitArgs& a) {
  config::FitRun run;
  if (!a.config.empty()) run = config::parse_fit(config::parse_json_text(read_file(a.config)));
  if (a.n_c) run.n_c = a.n_c;
  if (a.fix_beta) run.fix_beta = a.fix_beta;
  if (a.per_power_tan_delta) run.per_power_tan_delta = true;
  if (a.global) run.mode = HoleFitMode::Global;
  if (a.threads != 1) run.threads = a.threads;
  if (run.n_c && !(*run.n_c > 0.0)) throw ValidationError("--n-c must be positive");
  if (run.fix_beta && !(*run.fix_beta > 0.0)) throw ValidationError("--fix-beta must be positive");
  return run;
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const config::FitRun run = resolve_fit(a);
  if (a.kind == "hole-capelle" && !run.n_c)
    throw ValidationError(
        "hole-capelle requires --n-c: n_c is fixed externally (from the single-mode saturation fit) and is not a "
        "free parameter in this fit");
  const std::string bytes = read_file(a.input);

  Json echo = config::to_json(run);
  echo["kind"] = a.kind;
  echo["input"] = fs::path(a.input).filename().string();
  echo["input_fingerprint"] = fingerprint(bytes);
  const ThermalContext ctx{run.pump_hz, run.temperature_k};

  Json doc;
  bool converged = true;
  if (a.kind == "resonance") {
    const ReflectionTrace trace = csv::parse_trace(bytes);
    try {
      doc = config::fit_document("resonance", fit_resonance(trace).fit, echo);
    } catch (const ConvergenceFailure& e) {
      doc = config::fit_document("resonance", e.result(), echo);
      doc["message"] = e.what();
      converged = false;
    }
  } else if (a.kind == "saturation") {
    const SaturationCurve curve = csv::parse_saturation(bytes);
    SaturationFitOptions opts;
    opts.fixed_beta = run.fix_beta;
    try {
      const SaturationFit fit = fit_saturation(curve, ctx, opts);
      doc = config::fit_document("saturation", fit.fit, echo);
      doc["derived"] = {{"n_s", fit.n_s}};
    } catch (const InsufficientSpan& e) {
      doc = config::fit_document("saturation", e.result(), echo);
      doc["converged"] = false;
      doc["message"] = e.what();
      converged = false;
    } catch (const ConvergenceFailure& e) {
      doc = config::fit_document("saturation", e.result(), echo);
      doc["message"] = e.what();
      converged = false;
    }
  } else {
    const TwoToneMap map = csv::parse_twotone(bytes);
    HoleFitOptions opts;
    opts.mode = run.mode;
    opts.per_power_shared = run.per_power_tan_delta;
    opts.threads = run.threads;
    const HoleFitSeries series =
        a.kind == "hole-stm" ? fit_hole_stm(map, ctx, opts) : fit_hole_capelle(map, *run.n_c, ctx, opts);
    doc = config::hole_document(series, echo);
    converged = series.loss.converged && series.shift.converged;
  }
  write_file_atomic(a.output, dump(doc));
  if (!converged) {
    out << "wrote " << a.output << " (not converged)\n";
    throw ConvergenceFailure(doc.value("message", std::string("fit did not converge")), FitResult{});
  }
  out << "wrote " << a.output << "\n";
  return kOk;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  if (a.inputs.empty()) throw ValidationError("report: no inputs given");
  std::vector<report::Input> inputs;
  for (const auto& p : a.inputs) inputs.push_back({fs::path(p).filename().string(), read_file(p)});
  const auto files = report::build(inputs, {a.svg});
  std::error_code ec;
  fs::create_directories(a.output, ec);
  if (ec) throw IoError("cannot create output directory '" + a.output + "'");
  for (const auto& [name, content] : files) write_file_atomic(fs::path(a.output) / name, content);
  out << "wrote " << files.size() << " files to " << a.output << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"TLS spectral hole-burning modeling and fitting toolkit", "holeburn"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("kind", sa.kind, "saturation | twotone | trace")
      ->required()
      ->check(CLI::IsMember({"saturation", "twotone", "trace"}));
  synth->add_option("--config", sa.config, "JSON run configuration")->required();
  synth->add_option("--output", sa.output, "output CSV; the resolved config goes to a .json sidecar")->required();
  synth->add_option("--seed", sa.seed, "override the configured seed");
  synth->add_option("--threads", sa.threads, "worker threads (output does not depend on it)")->check(CLI::PositiveNumber);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "fit a dataset and write a result document");
  fit->add_option("kind", fa.kind, "resonance | saturation | hole-stm | hole-capelle")
      ->required()
      ->check(CLI::IsMember({"resonance", "saturation", "hole-stm", "hole-capelle"}));
  fit->add_option("input", fa.input, "input CSV")->required();
  fit->add_option("--output", fa.output, "output JSON")->required();
  fit->add_option("--config", fa.config, "JSON fit configuration");
  fit->add_option("--n-c", fa.n_c, "critical phonon number from the single-mode fit (hole-capelle)");
  fit->add_option("--fix-beta", fa.fix_beta, "hold the saturation exponent fixed");
  fit->add_flag("--per-power-tan-delta", fa.per_power_tan_delta, "fit the shared amplitude separately per power");
  fit->add_flag("--global", fa.global, "fit Omega = Omega_0 n^k jointly over all powers (hole-stm)");
  fit->add_option("--threads", fa.threads, "worker threads for per-power fits")->check(CLI::PositiveNumber);

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "assemble plot-ready tables and a summary");
  rep->add_option("--output", ra.output, "output directory")->required();
  rep->add_flag("--svg", ra.svg, "also write SVG plots");
  rep->add_option("inputs", ra.inputs, "fit documents and datasets");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  try {
    if (synth->parsed()) return cmd_synth(sa, out);
    if (fit->parsed()) return cmd_fit(fa, out);
    return cmd_report(ra, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const ConvergenceFailure& e) {
    err << "error: " << e.what() << "\n";
    return kConvergence;
  } catch (const InsufficientSpan& e) {
    err << "error: " << e.what() << "\n";
    return kConvergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
}

}  // namespace holeburn::cli
