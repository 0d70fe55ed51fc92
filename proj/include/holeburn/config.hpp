#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "holeburn/fitting.hpp"
#include "holeburn/pipeline.hpp"
#include "holeburn/resonator.hpp"
#include "holeburn/synth.hpp"

// JSON run configurations and result documents. Configs carry `schema_version`;
// unknown keys are rejected with their dotted path.
namespace holeburn::config {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct TraceSpec {
  ModeFit mode;
  double span_linewidths = 20.0;
  int points = 400;
};

struct SynthRun {
  SynthConfig synth;
  std::optional<TraceSpec> trace;
};

struct FitRun {
  double pump_hz = 2.399e9;
  double temperature_k = 0.010;
  HoleFitMode mode = HoleFitMode::PerPower;
  std::optional<double> n_c;
  std::optional<double> fix_beta;
  bool per_power_tan_delta = false;
  int threads = 1;
};

SynthRun parse_synth(const Json& doc);
Json to_json(const SynthRun& run);  // fully resolved; parse_synth(to_json(r)) reproduces r

FitRun parse_fit(const Json& doc);
Json to_json(const FitRun& run);

Json parse_json_text(const std::string& text);

// {model, params:{name:{value,stderr}}, covariance, residual_norm, n_iter, converged, config_echo}
Json fit_document(const std::string& model, const FitResult& fit, const Json& config_echo);

// Hole-fit document: the fit_document fields plus quantity, n_c, series and global scaling.
Json hole_document(const HoleFitSeries& series, const Json& config_echo);
HoleFitSeries hole_series_from(const Json& doc);

}  // namespace holeburn::config
