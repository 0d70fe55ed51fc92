#include "holeburn/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>

#include "holeburn/config.hpp"
#include "holeburn/io.hpp"
#include "holeburn/svg.hpp"

namespace holeburn::report {

namespace {

using config::Json;
using csv::format_double;

struct Dataset {
  std::string name;
  std::string fingerprint;
  csv::Kind kind = csv::Kind::Unknown;
  std::string bytes;
};

struct FitDoc {
  std::string name;
  std::string model;
  Json doc;
};

std::string cell(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

Json value_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

bool looks_like_json(const std::string& bytes) {
  for (char c : bytes) {
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t') continue;
    return c == '{';
  }
  return false;
}

double echo_number(const FitDoc& f, const char* key) {
  const auto& echo = f.doc.at("config_echo");
  if (!echo.contains(key) || !echo.at(key).is_number())
    throw ValidationError("fit document '" + f.name + "' lacks config_echo." + key);
  return echo.at(key).get<double>();
}

std::string echo_fingerprint(const FitDoc& f) {
  const auto& echo = f.doc.at("config_echo");
  return echo.contains("input_fingerprint") ? echo.at("input_fingerprint").get<std::string>() : std::string();
}

FitResult result_from(const FitDoc& f) {
  FitResult r;
  const auto& params = f.doc.at("params");
  r.estimates.resize(static_cast<Eigen::Index>(params.size()));
  r.std_errors.resize(r.estimates.size());
  Eigen::Index i = 0;
  for (const auto& item : params.items()) {
    r.names.push_back(item.key());
    const auto& v = item.value();
    r.estimates[i] = v.at("value").is_null() ? std::nan("") : v.at("value").get<double>();
    r.std_errors[i] = v.at("stderr").is_null() ? std::numeric_limits<double>::infinity() : v.at("stderr").get<double>();
    ++i;
  }
  r.converged = f.doc.at("converged").get<bool>();
  return r;
}

Json param_json(const FitResult& r, const std::string& name) {
  return {{"value", value_json(r.value(name))}, {"stderr", value_json(r.stderr_of(name))}};
}

Json powerlaw_json(const PowerLawFit& p, const char* amplitude_key) {
  return {{amplitude_key, p.amplitude},
          {std::string(amplitude_key) + "_stderr", value_json(p.amplitude_stderr)},
          {"k", p.exponent},
          {"k_stderr", value_json(p.exponent_stderr)},
          {"r_squared", value_json(p.r_squared)}};
}

// Every n_pump appearing in either channel, ascending.
std::vector<double> power_grid(const HoleFitSeries& s) {
  std::set<double> n;
  for (const auto& r : s.loss.rows) n.insert(r.n_pump);
  for (const auto& r : s.shift.rows) n.insert(r.n_pump);
  return {n.begin(), n.end()};
}

const HoleFitRow* row_at(const ChannelFit& ch, double n) {
  for (const auto& r : ch.rows)
    if (r.n_pump == n) return &r;
  return nullptr;
}

std::pair<std::vector<double>, std::vector<double>> channel_xy(const ChannelFit& ch) {
  std::vector<double> x, y;
  for (const auto& r : ch.rows) {
    x.push_back(r.n_pump);
    y.push_back(r.value);
  }
  return {x, y};
}

std::string hole_map_csv(const HoleFitSeries& series, const TwoToneMap& map, const ThermalContext& ctx) {
  std::string out = "delta_hz,n_pump,inv_q_tls,inv_q_tls_model,dfreq_hz,dfreq_model\n";
  for (const auto& r : map.rows) {
    double loss = std::nan(""), shift = std::nan("");
    if (row_at(series.loss, r.n_pump)) loss = predict_hole(series, HoleChannel::Loss, r.delta_hz, r.n_pump, ctx);
    if (row_at(series.shift, r.n_pump)) shift = predict_hole(series, HoleChannel::Shift, r.delta_hz, r.n_pump, ctx);
    out += format_double(r.delta_hz) + ',' + format_double(r.n_pump) + ',' + format_double(r.inv_q_tls) + ',' +
           cell(loss) + ',' + format_double(r.dfreq_hz) + ',' + cell(shift) + '\n';
  }
  return out;
}

// Attaches the two-tone dataset whose fingerprint the fit document echoes, if supplied.
std::optional<TwoToneMap> matching_map(const FitDoc& f, const std::vector<Dataset>& data, std::set<std::string>& used) {
  const std::string fp = echo_fingerprint(f);
  for (const auto& d : data)
    if (d.kind == csv::Kind::TwoTone && d.fingerprint == fp) {
      used.insert(d.name);
      return csv::parse_twotone(d.bytes);
    }
  return std::nullopt;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> build(const std::vector<Input>& inputs, const Options& options) {
  if (inputs.empty()) throw ValidationError("report: no inputs given");

  std::vector<Dataset> data;
  std::map<std::string, FitDoc> fits;  // keyed by model
  Json listing = Json::array();
  for (const auto& in : inputs) {
    const std::string fp = fingerprint(in.bytes);
    std::string kind;
    if (looks_like_json(in.bytes)) {
      FitDoc f{in.name, "", config::parse_json_text(in.bytes)};
      if (!f.doc.is_object() || !f.doc.contains("model") || !f.doc.at("model").is_string() ||
          !f.doc.contains("config_echo") || !f.doc.contains("params"))
        throw ValidationError("report: '" + in.name + "' is not a fit result document");
      f.model = f.doc.at("model").get<std::string>();
      if (f.model != "resonance" && f.model != "saturation" && f.model != "hole-stm" && f.model != "hole-capelle")
        throw ValidationError("report: '" + in.name + "' has unknown model '" + f.model + "'");
      if (fits.count(f.model))
        throw ValidationError("report: more than one '" + f.model + "' fit document (" + fits.at(f.model).name + ", " +
                              in.name + ")");
      kind = f.model;
      fits.emplace(f.model, std::move(f));
    } else {
      Dataset d{in.name, fp, csv::detect(in.bytes), in.bytes};
      if (d.kind == csv::Kind::Unknown) throw ValidationError("report: '" + in.name + "' is neither a fit document nor a known CSV");
      kind = d.kind == csv::Kind::Trace ? "trace" : d.kind == csv::Kind::Saturation ? "saturation-data" : "twotone-data";
      data.push_back(std::move(d));
    }
    listing.push_back({{"file", in.name}, {"kind", kind}, {"fingerprint", fp}});
  }
  if (fits.empty()) throw ValidationError("report: needs at least one fit result document");

  // All fits must describe the same pump mode and bath.
  std::optional<std::pair<double, double>> setup;
  for (const auto& [model, f] : fits) {
    if (model == "resonance") continue;
    const std::pair<double, double> s{echo_number(f, "pump_hz"), echo_number(f, "temperature_k")};
    if (setup && *setup != s)
      throw ValidationError("report: inconsistent inputs: '" + f.name + "' was fit with a different pump_hz/temperature_k");
    setup = s;
  }
  const ThermalContext ctx{setup ? setup->first : 0.0, setup ? setup->second : 0.0};

  std::set<std::string> used;
  std::vector<std::pair<std::string, std::string>> files;
  std::vector<svg::Plot> plots;
  std::vector<std::string> plot_names;
  Json summary;
  summary["inputs"] = listing;

  if (fits.count("resonance")) {
    const auto& f = fits.at("resonance");
    const FitResult r = result_from(f);
    for (const auto& d : data)
      if (d.kind == csv::Kind::Trace && d.fingerprint == echo_fingerprint(f)) used.insert(d.name);
    summary["resonance"] = {{"f_r_hz", param_json(r, "f_r_hz")},
                            {"q_int", param_json(r, "q_int")},
                            {"q_ext", param_json(r, "q_ext")},
                            {"q_loaded", param_json(r, "q_loaded")}};
  }

  std::optional<FitResult> saturation;
  if (fits.count("saturation")) {
    const auto& f = fits.at("saturation");
    saturation = result_from(f);
    const FitResult& r = *saturation;
    StmSaturationParams p{r.value("q_tls0"), r.value("n_c"), r.value("beta"), std::nullopt};
    if (std::isfinite(r.value("q_res"))) p.q_res = r.value("q_res");

    std::optional<SaturationCurve> curve;
    for (const auto& d : data)
      if (d.kind == csv::Kind::Saturation && d.fingerprint == echo_fingerprint(f)) {
        curve = csv::parse_saturation(d.bytes);
        used.insert(d.name);
      }
    std::string out = "series,n,q_int,q_int_err\n";
    double lo = 1e-2, hi = 1e8;
    svg::Plot plot{"Internal quality factor vs phonon number", "n", "Q_int", true, true, {}};
    if (curve) {
      svg::Series pts{"data", {}, {}, true};
      lo = std::numeric_limits<double>::infinity();
      hi = 0.0;
      for (const auto& row : curve->rows) {
        out += "data," + format_double(row.n) + ',' + format_double(row.q_int) + ',' + format_double(row.q_int_err) + '\n';
        pts.x.push_back(row.n);
        pts.y.push_back(row.q_int);
        if (row.n > 0.0) lo = std::min(lo, row.n), hi = std::max(hi, row.n);
      }
      plot.series.push_back(std::move(pts));
    }
    svg::Series line{"model", {}, {}, false};
    for (double n : log_grid(lo, hi, 200)) {
      const double q = 1.0 / stm_inverse_q(n, p, ctx);
      out += "model," + format_double(n) + ',' + format_double(q) + ",\n";
      line.x.push_back(n);
      line.y.push_back(q);
    }
    plot.series.push_back(std::move(line));
    files.emplace_back("saturation_overlay.csv", out);
    plots.push_back(std::move(plot));
    plot_names.push_back("saturation_overlay.svg");

    Json s;
    for (const char* name : {"beta", "n_c", "q_tls0", "q_res"}) s[name] = param_json(r, name);
    const auto& doc = f.doc;
    s["n_s"] = doc.contains("derived") && doc.at("derived").contains("n_s") ? doc.at("derived").at("n_s") : Json(nullptr);
    s["converged"] = r.converged;
    summary["saturation"] = s;
  }

  std::optional<ScalingFit> stm_scaling;
  std::optional<HoleFitSeries> stm;
  if (fits.count("hole-stm")) {
    const auto& f = fits.at("hole-stm");
    stm = config::hole_series_from(f.doc);
    if (auto map = matching_map(f, data, used)) files.emplace_back("hole_map_stm.csv", hole_map_csv(*stm, *map, ctx));
    stm_scaling = extract_scaling(*stm);

    std::string out = "n_pump,omega_loss_hz,omega_loss_stderr,omega_shift_hz,omega_shift_stderr,omega_reference_hz\n";
    for (double n : power_grid(*stm)) {
      const auto* l = row_at(stm->loss, n);
      const auto* s = row_at(stm->shift, n);
      out += format_double(n) + ',' + (l ? format_double(l->value) + ',' + cell(l->stderr) : std::string(",")) + ',' +
             (s ? format_double(s->value) + ',' + cell(s->stderr) : std::string(",")) + ',' +
             format_double(stm_scaling->reference.amplitude * std::sqrt(n)) + '\n';
    }
    files.emplace_back("scaling.csv", out);

    svg::Plot plot{"Effective Rabi frequency vs pump phonon number", "n_pump", "Omega/2pi (Hz)", true, true, {}};
    auto [lx, ly] = channel_xy(stm->loss);
    auto [sx, sy] = channel_xy(stm->shift);
    plot.series.push_back({"loss channel", lx, ly, true});
    plot.series.push_back({"shift channel", sx, sy, true});
    std::vector<double> ref;
    for (double n : lx) ref.push_back(stm_scaling->reference.amplitude * std::sqrt(n));
    plot.series.push_back({"k = 0.5 reference", lx, ref, false});
    plots.push_back(std::move(plot));
    plot_names.push_back("scaling.svg");

    Json j;
    j["fit_mode"] = f.doc.at("fit_mode");
    j["loss"] = powerlaw_json(stm_scaling->loss, "omega0_hz");
    j["shift"] = powerlaw_json(stm_scaling->shift, "omega0_hz");
    j["reference"] = {{"omega0_hz", stm_scaling->reference.amplitude},
                      {"omega0_hz_stderr", value_json(stm_scaling->reference.amplitude_stderr)},
                      {"k", 0.5}};
    for (const auto* ch : {&stm->loss, &stm->shift})
      if (ch->global)
        j["global"][ch->channel == HoleChannel::Loss ? "loss" : "shift"] = {
            {"omega0_hz", ch->global->omega0_hz},
            {"omega0_hz_stderr", value_json(ch->omega0_stderr)},
            {"k", ch->global->k},
            {"k_stderr", value_json(ch->k_stderr)}};
    j["tan_delta"] = {{"value", stm->shift.shared}, {"stderr", value_json(stm->shift.shared_stderr)}};
    j["q_tls0"] = {{"value", stm->loss.shared}, {"stderr", value_json(stm->loss.shared_stderr)}};
    summary["stm"] = j;
  }

  std::optional<ScalingFit> capelle_omega_scaling;
  if (fits.count("hole-capelle")) {
    const auto& f = fits.at("hole-capelle");
    const HoleFitSeries gamma2 = config::hole_series_from(f.doc);
    if (auto map = matching_map(f, data, used)) files.emplace_back("hole_map_capelle.csv", hole_map_csv(gamma2, *map, ctx));
    if (stm) {
      const auto a = power_grid(*stm), b = power_grid(gamma2);
      std::vector<double> common;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
      if (common.empty())
        throw ValidationError("report: inconsistent inputs: the two hole-fit documents share no pump powers");
    }
    const HoleFitSeries omega = rabi_from_linewidth(gamma2);
    const ScalingFit g = extract_scaling(gamma2);
    capelle_omega_scaling = extract_scaling(omega);

    std::string out =
        "n_pump,gamma2_loss_hz,gamma2_loss_stderr,gamma2_shift_hz,gamma2_shift_stderr,omega_loss_hz,omega_shift_hz\n";
    for (double n : power_grid(gamma2)) {
      const auto* l = row_at(gamma2.loss, n);
      const auto* s = row_at(gamma2.shift, n);
      const auto* ol = row_at(omega.loss, n);
      const auto* os = row_at(omega.shift, n);
      out += format_double(n) + ',' + (l ? format_double(l->value) + ',' + cell(l->stderr) : std::string(",")) + ',' +
             (s ? format_double(s->value) + ',' + cell(s->stderr) : std::string(",")) + ',' +
             (ol ? format_double(ol->value) : std::string()) + ',' + (os ? format_double(os->value) : std::string()) +
             '\n';
    }
    files.emplace_back("gamma2.csv", out);

    svg::Plot plot{"Intrinsic TLS linewidth vs pump phonon number", "n_pump", "Gamma_2/2pi (Hz)", true, true, {}};
    auto [lx, ly] = channel_xy(gamma2.loss);
    auto [sx, sy] = channel_xy(gamma2.shift);
    plot.series.push_back({"loss channel", lx, ly, true});
    plot.series.push_back({"shift channel", sx, sy, true});
    plots.push_back(std::move(plot));
    plot_names.push_back("gamma2.svg");

    Json j;
    j["n_c"] = *gamma2.n_c;
    j["gamma2"] = {{"loss", powerlaw_json(g.loss, "gamma2_0_hz")}, {"shift", powerlaw_json(g.shift, "gamma2_0_hz")}};
    j["omega"] = {{"loss", powerlaw_json(capelle_omega_scaling->loss, "omega0_hz")},
                  {"shift", powerlaw_json(capelle_omega_scaling->shift, "omega0_hz")}};
    j["gamma0_hz"] = {{"value", gamma2.shift.shared}, {"stderr", value_json(gamma2.shift.shared_stderr)}};
    summary["capelle"] = j;
  }

  for (const auto& d : data)
    if (!used.count(d.name))
      throw ValidationError("report: inconsistent inputs: dataset '" + d.name +
                            "' does not match the input fingerprint of any fit document");

  // T2 needs the single-mode n_c and an Omega_0 from the forced k = 0.5 line.
  if (saturation && (stm_scaling || capelle_omega_scaling)) {
    const PowerLawFit& ref = stm_scaling ? stm_scaling->reference : capelle_omega_scaling->reference;
    const T2Report t2 = report_t2(*saturation, ref);
    summary["t2"] = {{"t2_s", t2.t2_s},
                     {"omega0_hz", t2.omega0_hz},
                     {"n_c", t2.n_c},
                     {"omega0_source", stm_scaling ? "hole-stm" : "hole-capelle"},
                     {"assumptions", t2.assumptions}};
  } else {
    summary["t2"] = nullptr;
  }

  files.emplace_back("summary.json", summary.dump(2) + "\n");
  if (options.svg)
    for (std::size_t i = 0; i < plots.size(); ++i) files.emplace_back(plot_names[i], svg::render(plots[i]));
  return files;
}

}  // namespace holeburn::report
