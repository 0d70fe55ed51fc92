#include "holeburn/config.hpp"

#include <cmath>
#include <set>

namespace holeburn::config {

namespace {

// Tracks which keys of an object were consumed so leftovers can be reported.
class Reader {
 public:
  Reader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ValidationError(where("") + " must be a JSON object");
  }

  bool has(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    if (!obj_.contains(key)) throw ValidationError("missing required field '" + where(key) + "'");
    return obj_.at(key);
  }

  double number(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number()) throw ValidationError("field '" + where(key) + "' must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    used_.insert(key);
    return has(key) ? number(key) : fallback;
  }
  std::optional<double> maybe_number(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return number(key);
  }
  long long integer(const std::string& key, long long fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const Json& v = obj_.at(key);
    if (!v.is_number_integer()) throw ValidationError("field '" + where(key) + "' must be an integer");
    return v.get<long long>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const Json& v = obj_.at(key);
    if (!v.is_string()) throw ValidationError("field '" + where(key) + "' must be a string");
    return v.get<std::string>();
  }
  bool flag(const std::string& key, bool fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const Json& v = obj_.at(key);
    if (!v.is_boolean()) throw ValidationError("field '" + where(key) + "' must be a boolean");
    return v.get<bool>();
  }
  std::optional<Reader> child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return Reader(obj_.at(key), where(key));
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "document" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& item : obj_.items())
      if (!used_.count(item.key())) throw ValidationError("unknown field '" + where(item.key()) + "'");
  }

 private:
  const Json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

void check_version(Reader& r) {
  const auto v = r.integer("schema_version", -1);
  if (v != kSchemaVersion)
    throw ValidationError("schema_version must be " + std::to_string(kSchemaVersion) + " (found " + std::to_string(v) + ")");
}

void require_nonnegative(double v, const std::string& field) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("field '" + field + "' must be >= 0");
}

void require_positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("field '" + field + "' must be positive");
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_from(const Json& v) { return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>(); }

}  // namespace

Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
}

SynthRun parse_synth(const Json& doc) {
  Reader r(doc, "");
  check_version(r);
  SynthRun run;
  SynthConfig& cfg = run.synth;
  const auto seed = r.integer("seed", 0);
  if (seed < 0) throw ValidationError("field 'seed' must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.pump_hz = r.number("pump_hz", cfg.pump_hz);
  require_positive(cfg.pump_hz, "pump_hz");
  cfg.temperature_k = r.number("temperature_k", cfg.temperature_k);
  require_nonnegative(cfg.temperature_k, "temperature_k");

  if (auto g = r.child("geometry")) {
    cfg.geometry.fsr_hz = g->number("fsr_hz", cfg.geometry.fsr_hz);
    cfg.geometry.stopband_center_hz = g->number("stopband_center_hz", cfg.geometry.stopband_center_hz);
    cfg.geometry.stopband_width_hz = g->number("stopband_width_hz", cfg.geometry.stopband_width_hz);
    cfg.geometry.mode_count = static_cast<int>(g->integer("mode_count", cfg.geometry.mode_count));
    g->finish();
    validate(cfg.geometry);
  }
  if (auto s = r.child("saturation")) {
    StmSaturationParams p;
    p.q_tls0 = s->number("q_tls0");
    p.n_c = s->number("n_c");
    p.beta = s->number("beta", 1.0);
    p.q_res = s->maybe_number("q_res");
    s->finish();
    validate(p);
    cfg.saturation = p;
  }
  if (auto t = r.child("twotone")) {
    const std::string model = t->text("model", "stm");
    if (model == "stm") {
      cfg.twotone_model = TwoToneModel::Stm;
      cfg.tan_delta = t->number("tan_delta");
      require_positive(*cfg.tan_delta, "twotone.tan_delta");
      cfg.rabi = RabiScaling{t->number("omega0_hz"), t->number("k", 0.5)};
      validate(*cfg.rabi);
    } else if (model == "capelle") {
      cfg.twotone_model = TwoToneModel::Capelle;
      cfg.capelle = CapelleParams{t->number("gamma0_hz"), t->number("gamma2_hz")};
      cfg.gamma2_exponent = t->number("gamma2_exponent", 0.0);
      validate(*cfg.capelle);
    } else {
      throw ValidationError("field 'twotone.model' must be \"stm\" or \"capelle\"");
    }
    t->finish();
  }
  if (r.has("n_values") && r.has("n_grid")) throw ValidationError("give either 'n_values' or 'n_grid', not both");
  if (r.has("n_values")) {
    const Json& v = r.raw("n_values");
    if (!v.is_array()) throw ValidationError("field 'n_values' must be an array");
    for (const auto& x : v) {
      if (!x.is_number()) throw ValidationError("field 'n_values' must contain numbers");
      cfg.n_values.push_back(x.get<double>());
    }
  } else if (auto g = r.child("n_grid")) {
    const double lo = g->number("min"), hi = g->number("max");
    const auto count = g->integer("count", 0);
    g->finish();
    if (count < 1) throw ValidationError("field 'n_grid.count' must be >= 1");
    require_positive(lo, "n_grid.min");
    if (!(hi >= lo)) throw ValidationError("field 'n_grid.max' must be >= n_grid.min");
    cfg.n_values = log_grid(lo, hi, static_cast<int>(count));
  }
  if (r.has("detuning_multiples")) {
    const Json& v = r.raw("detuning_multiples");
    if (!v.is_array()) throw ValidationError("field 'detuning_multiples' must be an array");
    for (const auto& x : v) {
      if (!x.is_number_integer()) throw ValidationError("field 'detuning_multiples' must contain integers");
      cfg.detuning_multiples.push_back(x.get<int>());
    }
  }
  if (auto n = r.child("noise")) {
    cfg.noise.q_fraction = n->number("q_fraction", 0.0);
    cfg.noise.inv_q_fraction = n->number("inv_q_fraction", 0.0);
    cfg.noise.shift_fraction = n->number("shift_fraction", 0.0);
    cfg.noise.trace_sigma = n->number("trace_sigma", 0.0);
    n->finish();
    require_nonnegative(cfg.noise.q_fraction, "noise.q_fraction");
    require_nonnegative(cfg.noise.inv_q_fraction, "noise.inv_q_fraction");
    require_nonnegative(cfg.noise.shift_fraction, "noise.shift_fraction");
    require_nonnegative(cfg.noise.trace_sigma, "noise.trace_sigma");
  }
  if (auto t = r.child("trace")) {
    TraceSpec spec;
    spec.mode.f_r_hz = t->number("f_r_hz");
    spec.mode.q_int = t->number("q_int");
    spec.mode.q_ext = t->number("q_ext");
    spec.mode.background.amplitude = t->number("amplitude", 1.0);
    spec.mode.background.phase = t->number("phase", 0.0);
    spec.mode.background.delay_s = t->number("delay_s", 0.0);
    spec.span_linewidths = t->number("span_linewidths", spec.span_linewidths);
    spec.points = static_cast<int>(t->integer("points", spec.points));
    t->finish();
    require_positive(spec.mode.f_r_hz, "trace.f_r_hz");
    require_positive(spec.mode.q_int, "trace.q_int");
    require_positive(spec.mode.q_ext, "trace.q_ext");
    require_positive(spec.span_linewidths, "trace.span_linewidths");
    if (spec.points < 8) throw ValidationError("field 'trace.points' must be >= 8");
    run.trace = spec;
  }
  r.finish();
  if (!cfg.n_values.empty() || cfg.saturation || cfg.tan_delta || cfg.capelle) validate(cfg);
  return run;
}

Json to_json(const SynthRun& run) {
  const SynthConfig& cfg = run.synth;
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = cfg.seed;
  j["pump_hz"] = cfg.pump_hz;
  j["temperature_k"] = cfg.temperature_k;
  j["geometry"] = {{"fsr_hz", cfg.geometry.fsr_hz},
                   {"stopband_center_hz", cfg.geometry.stopband_center_hz},
                   {"stopband_width_hz", cfg.geometry.stopband_width_hz},
                   {"mode_count", cfg.geometry.mode_count}};
  if (cfg.saturation) {
    const auto& s = *cfg.saturation;
    j["saturation"] = {{"q_tls0", s.q_tls0}, {"n_c", s.n_c}, {"beta", s.beta}, {"q_res", optional_number(s.q_res)}};
  }
  if (cfg.twotone_model == TwoToneModel::Stm && cfg.tan_delta && cfg.rabi) {
    j["twotone"] = {{"model", "stm"}, {"tan_delta", *cfg.tan_delta}, {"omega0_hz", cfg.rabi->omega0_hz}, {"k", cfg.rabi->k}};
  } else if (cfg.twotone_model == TwoToneModel::Capelle && cfg.capelle) {
    j["twotone"] = {{"model", "capelle"},
                    {"gamma0_hz", cfg.capelle->gamma0_hz},
                    {"gamma2_hz", cfg.capelle->gamma2_hz},
                    {"gamma2_exponent", cfg.gamma2_exponent}};
  }
  j["n_values"] = cfg.n_values;
  j["detuning_multiples"] = cfg.detuning_multiples;
  j["noise"] = {{"q_fraction", cfg.noise.q_fraction},
                {"inv_q_fraction", cfg.noise.inv_q_fraction},
                {"shift_fraction", cfg.noise.shift_fraction},
                {"trace_sigma", cfg.noise.trace_sigma}};
  if (run.trace) {
    const auto& t = *run.trace;
    j["trace"] = {{"f_r_hz", t.mode.f_r_hz},
                  {"q_int", t.mode.q_int},
                  {"q_ext", t.mode.q_ext},
                  {"amplitude", t.mode.background.amplitude},
                  {"phase", t.mode.background.phase},
                  {"delay_s", t.mode.background.delay_s},
                  {"span_linewidths", t.span_linewidths},
                  {"points", t.points}};
  }
  return j;
}

FitRun parse_fit(const Json& doc) {
  Reader r(doc, "");
  check_version(r);
  FitRun run;
  run.pump_hz = r.number("pump_hz", run.pump_hz);
  require_positive(run.pump_hz, "pump_hz");
  run.temperature_k = r.number("temperature_k", run.temperature_k);
  require_nonnegative(run.temperature_k, "temperature_k");
  const std::string mode = r.text("mode", "per-power");
  if (mode == "per-power") run.mode = HoleFitMode::PerPower;
  else if (mode == "global") run.mode = HoleFitMode::Global;
  else throw ValidationError("field 'mode' must be \"per-power\" or \"global\"");
  run.n_c = r.maybe_number("n_c");
  if (run.n_c) require_positive(*run.n_c, "n_c");
  run.fix_beta = r.maybe_number("fix_beta");
  if (run.fix_beta) require_positive(*run.fix_beta, "fix_beta");
  run.per_power_tan_delta = r.flag("per_power_tan_delta", false);
  run.threads = static_cast<int>(r.integer("threads", 1));
  r.finish();
  return run;
}

Json to_json(const FitRun& run) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["pump_hz"] = run.pump_hz;
  j["temperature_k"] = run.temperature_k;
  j["mode"] = run.mode == HoleFitMode::Global ? "global" : "per-power";
  j["n_c"] = optional_number(run.n_c);
  j["fix_beta"] = optional_number(run.fix_beta);
  j["per_power_tan_delta"] = run.per_power_tan_delta;
  return j;
}

Json fit_document(const std::string& model, const FitResult& fit, const Json& config_echo) {
  Json doc;
  doc["model"] = model;
  Json params = Json::object();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    params[fit.names[i]] = {{"value", number_or_null(fit.estimates[k])}, {"stderr", number_or_null(fit.std_errors[k])}};
  }
  doc["params"] = params;
  Json cov = Json::array();
  for (Eigen::Index a = 0; a < fit.covariance.rows(); ++a) {
    Json row = Json::array();
    for (Eigen::Index b = 0; b < fit.covariance.cols(); ++b) row.push_back(number_or_null(fit.covariance(a, b)));
    cov.push_back(row);
  }
  doc["covariance"] = cov;
  doc["residual_norm"] = fit.residual_norm;
  doc["n_iter"] = fit.iterations;
  doc["converged"] = fit.converged;
  doc["message"] = fit.message;
  doc["config_echo"] = config_echo;
  return doc;
}

namespace {

Json channel_json(const ChannelFit& ch) {
  Json rows = Json::array();
  for (const auto& r : ch.rows)
    rows.push_back({{"n_pump", r.n_pump},
                    {"value", r.value},
                    {"stderr", number_or_null(r.stderr)},
                    {"converged", r.converged},
                    {"shared", r.shared},
                    {"shared_stderr", number_or_null(r.shared_stderr)}});
  Json j;
  j["shared_name"] = ch.shared_name;
  j["shared"] = {{"value", ch.shared}, {"stderr", number_or_null(ch.shared_stderr)}};
  j["rows"] = rows;
  j["converged"] = ch.converged;
  if (ch.global)
    j["global"] = {{"omega0_hz", ch.global->omega0_hz},
                   {"omega0_stderr", number_or_null(ch.omega0_stderr)},
                   {"k", ch.global->k},
                   {"k_stderr", number_or_null(ch.k_stderr)}};
  return j;
}

ChannelFit channel_from(const Json& j, HoleChannel channel) {
  ChannelFit ch;
  ch.channel = channel;
  ch.shared_name = j.at("shared_name").get<std::string>();
  ch.shared = j.at("shared").at("value").get<double>();
  ch.shared_stderr = number_from(j.at("shared").at("stderr"));
  ch.converged = j.at("converged").get<bool>();
  for (const auto& r : j.at("rows")) {
    HoleFitRow row;
    row.n_pump = r.at("n_pump").get<double>();
    row.value = r.at("value").get<double>();
    row.stderr = number_from(r.at("stderr"));
    row.converged = r.at("converged").get<bool>();
    row.shared = r.at("shared").get<double>();
    row.shared_stderr = number_from(r.at("shared_stderr"));
    ch.rows.push_back(row);
  }
  if (j.contains("global")) {
    const auto& g = j.at("global");
    ch.global = RabiScaling{g.at("omega0_hz").get<double>(), g.at("k").get<double>()};
    ch.omega0_stderr = number_from(g.at("omega0_stderr"));
    ch.k_stderr = number_from(g.at("k_stderr"));
  }
  return ch;
}

// Flattens both channels into one parameter list with block-diagonal covariance.
FitResult combined_result(const HoleFitSeries& s) {
  FitResult out;
  std::vector<std::pair<std::string, std::pair<double, double>>> entries;
  std::vector<const FitResult*> blocks;
  out.converged = s.loss.converged && s.shift.converged;
  double ss = 0.0;
  for (const ChannelFit* ch : {&s.loss, &s.shift}) {
    const std::string prefix = ch->channel == HoleChannel::Loss ? "loss." : "shift.";
    ss += ch->fit.residual_norm * ch->fit.residual_norm;
    out.iterations += ch->fit.iterations;
    if (ch->fit.estimates.size() > 0) {
      for (std::size_t i = 0; i < ch->fit.names.size(); ++i)
        out.names.push_back(prefix + ch->fit.names[i]);
    } else {
      for (std::size_t j = 0; j < ch->rows.size(); ++j) {
        out.names.push_back(prefix + ch->shared_name + "[" + std::to_string(j) + "]");
        out.names.push_back(prefix + s.quantity + "[" + std::to_string(j) + "]");
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(out.names.size());
  out.estimates = Eigen::VectorXd::Zero(n);
  out.covariance = Eigen::MatrixXd::Zero(n, n);
  Eigen::Index at = 0;
  for (const ChannelFit* ch : {&s.loss, &s.shift}) {
    const auto& f = ch->fit;
    if (f.estimates.size() > 0) {
      const auto m = f.estimates.size();
      out.estimates.segment(at, m) = f.estimates;
      out.covariance.block(at, at, m, m) = f.covariance;
      at += m;
    } else {
      for (const auto& r : ch->rows) {
        out.estimates[at] = r.shared;
        out.covariance(at, at) = r.shared_stderr * r.shared_stderr;
        out.estimates[at + 1] = r.value;
        out.covariance(at + 1, at + 1) = r.stderr * r.stderr;
        at += 2;
      }
    }
  }
  out.std_errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.residual_norm = std::sqrt(ss);
  out.message = out.converged ? "converged" : "one or more fits did not converge";
  return out;
}

}  // namespace

Json hole_document(const HoleFitSeries& series, const Json& config_echo) {
  const std::string model = series.model == HoleModel::Stm ? "hole-stm" : "hole-capelle";
  Json doc = fit_document(model, combined_result(series), config_echo);
  doc["quantity"] = series.quantity;
  doc["fit_mode"] = series.mode == HoleFitMode::Global ? "global" : "per-power";
  doc["n_c"] = optional_number(series.n_c);
  doc["series"] = {{"loss", channel_json(series.loss)}, {"shift", channel_json(series.shift)}};
  return doc;
}

HoleFitSeries hole_series_from(const Json& doc) {
  try {
    HoleFitSeries s;
    const auto model = doc.at("model").get<std::string>();
    if (model == "hole-stm") s.model = HoleModel::Stm;
    else if (model == "hole-capelle") s.model = HoleModel::Capelle;
    else throw ValidationError("not a hole-fit document: model '" + model + "'");
    s.quantity = doc.at("quantity").get<std::string>();
    s.mode = doc.at("fit_mode").get<std::string>() == "global" ? HoleFitMode::Global : HoleFitMode::PerPower;
    if (!doc.at("n_c").is_null()) s.n_c = doc.at("n_c").get<double>();
    s.loss = channel_from(doc.at("series").at("loss"), HoleChannel::Loss);
    s.shift = channel_from(doc.at("series").at("shift"), HoleChannel::Shift);
    return s;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed hole-fit document: ") + e.what());
  }
}

}  // namespace holeburn::config
