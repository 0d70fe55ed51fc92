#include "holeburn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "holeburn/parallel.hpp"

namespace holeburn {

// ---------------------------------------------------------------------------
// Saturation
// ---------------------------------------------------------------------------

SaturationFit fit_saturation(const SaturationCurve& curve, const ThermalContext& ctx,
                             const SaturationFitOptions& options) {
  validate(curve);
  validate(ctx);
  std::vector<SaturationRow> rows = curve.rows;
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
  if (rows.size() < 6) throw ValidationError("saturation fit needs at least 6 rows, got " + std::to_string(rows.size()));
  double n_lo = std::numeric_limits<double>::infinity();
  for (const auto& r : rows)
    if (r.n > 0.0) n_lo = std::min(n_lo, r.n);
  if (!(rows.back().n >= 100.0 * n_lo))
    throw ValidationError("saturation fit needs the phonon numbers to span at least 2 decades");

  const std::size_t m = rows.size();
  Eigen::VectorXd n(m), y(m), w(m);
  const bool have_errors = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.q_int_err > 0.0; });
  for (std::size_t i = 0; i < m; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    n[k] = rows[i].n;
    y[k] = 1.0 / rows[i].q_int;
    // sigma(1/Q) = sigma(Q) / Q^2; without errors the residuals are relative.
    w[k] = have_errors ? rows[i].q_int * rows[i].q_int / rows[i].q_int_err : rows[i].q_int;
  }

  const double th = thermal_factor(ctx);
  const double inv_res0 = 0.5 * y.minCoeff();
  const double tls0 = std::max(y[0] - inv_res0, 0.5 * y[0]);
  double n_c0 = n[static_cast<Eigen::Index>(m - 1)];
  for (std::size_t i = 1; i < m; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (y[k] - inv_res0 <= tls0 / std::numbers::sqrt2) {
      n_c0 = n[k - 1] > 0.0 ? std::sqrt(n[k - 1] * n[k]) : n[k];
      break;
    }
  }

  FitProblem problem;
  problem.names = {"q_tls0", "n_c", "beta", "q_res"};
  problem.initial.resize(4);
  problem.initial << th / tls0, n_c0, options.fixed_beta.value_or(1.0), 1.0 / inv_res0;
  problem.transforms = {Transform::LogPositive, Transform::LogPositive,
                        options.fixed_beta ? Transform::Fixed : Transform::LogPositive, Transform::LogPositive};
  problem.weights = w;
  problem.options = options.fit;
  problem.residual = [&](const Eigen::VectorXd& p) {
    const StmSaturationParams sp{p[0], p[1], p[2], p[3]};
    Eigen::VectorXd r(n.size());
    for (Eigen::Index i = 0; i < n.size(); ++i) r[i] = stm_inverse_q(n[i], sp, ctx) - y[i];
    return r;
  };

  FitResult fit = solve_least_squares(problem);
  const double n_c = fit.value("n_c");
  const double floor = options.span_noise_floor;
  const double var = fit.unscaled_covariance(1, 1) * std::max(fit.residual_variance, floor * floor);
  if (!(std::sqrt(var) <= n_c))
    throw InsufficientSpan("saturation knee not constrained by the data: stderr(n_c) exceeds n_c", fit);
  if (!fit.converged) throw ConvergenceFailure("saturation fit did not converge: " + fit.message, fit);

  SaturationFit out;
  out.params = {fit.estimates[0], fit.estimates[1], fit.estimates[2], fit.estimates[3]};
  out.n_s = out.params.n_c * std::pow(99.0, 1.0 / out.params.beta);
  out.fit = std::move(fit);
  return out;
}

// ---------------------------------------------------------------------------
// Hole fits
// ---------------------------------------------------------------------------

namespace {

struct Cell {
  double delta = 0.0;
  double f_probe = 0.0;
  double thermal = 0.0;
  double n = 0.0;
  double y = 0.0;
  double w = 0.0;
};

struct Group {
  double n = 0.0;
  std::vector<Cell> cells;
};

// Observable = c * basis(cell, x), with c the (linear) shared parameter and x the
// per-power parameter.
using Basis = std::function<double(const Cell&, double)>;

struct ChannelSpec {
  HoleChannel channel;
  std::string shared_name;
  bool shared_is_inverse = false;  // q_tls0 is reported, c = 1/q_tls0 is fitted
  Basis basis;
  std::optional<double> fixed_shared;
};

double to_linear(const ChannelSpec& spec, double natural) { return spec.shared_is_inverse ? 1.0 / natural : natural; }

std::vector<Group> build_groups(const TwoToneMap& map, const ThermalContext& ctx, HoleChannel channel) {
  validate(map);
  validate(ctx);
  std::vector<Cell> cells;
  double y_scale = 0.0;
  bool have_errors = !map.rows.empty();
  for (const auto& r : map.rows) {
    const double y = channel == HoleChannel::Loss ? r.inv_q_tls : r.dfreq_hz;
    y_scale = std::max(y_scale, std::abs(y));
    have_errors = have_errors && (channel == HoleChannel::Loss ? r.inv_q_tls_err : r.dfreq_err) > 0.0;
  }
  if (!(y_scale > 0.0)) throw ValidationError("two-tone map: observable is identically zero");
  for (const auto& r : map.rows) {
    if (!(r.n_pump > 0.0)) continue;
    Cell c;
    c.delta = r.delta_hz;
    c.f_probe = ctx.f_r_hz + r.delta_hz;
    c.thermal = thermal_factor({c.f_probe, ctx.temperature_k});
    c.n = r.n_pump;
    c.y = channel == HoleChannel::Loss ? r.inv_q_tls : r.dfreq_hz;
    if (have_errors) c.w = 1.0 / (channel == HoleChannel::Loss ? r.inv_q_tls_err : r.dfreq_err);
    else if (channel == HoleChannel::Loss) c.w = 1.0 / std::max(std::abs(c.y), 1e-12 * y_scale);
    else c.w = 1.0 / y_scale;
    cells.push_back(c);
  }
  std::sort(cells.begin(), cells.end(),
            [](const Cell& a, const Cell& b) { return a.n < b.n || (a.n == b.n && a.delta < b.delta); });
  std::vector<Group> groups;
  for (const auto& c : cells) {
    if (groups.empty() || groups.back().n != c.n) groups.push_back({c.n, {}});
    groups.back().cells.push_back(c);
  }
  if (groups.empty()) throw ValidationError("two-tone map has no rows with n_pump > 0");
  for (const auto& g : groups)
    if (g.cells.size() < 3)
      throw ValidationError("two-tone map needs at least 3 detunings per pump power (n_pump=" + std::to_string(g.n) + ")");
  return groups;
}

struct ScanResult {
  double x = 0.0;
  double c = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

std::vector<double> scan_grid(const std::vector<Group>& groups) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& g : groups)
    for (const auto& c : g.cells) {
      lo = std::min(lo, std::abs(c.delta));
      hi = std::max(hi, std::abs(c.delta));
    }
  return log_grid(lo * 1e-5, hi * 1e5, 401);
}

// Best x on the grid for one power; c is solved linearly unless fixed.
ScanResult scan_power(const Group& g, const Basis& basis, const std::vector<double>& grid, std::optional<double> c_fixed) {
  ScanResult best;
  for (double x : grid) {
    double sbb = 0.0, sby = 0.0;
    for (const auto& c : g.cells) {
      const double b = basis(c, x) * c.w;
      sbb += b * b;
      sby += b * c.y * c.w;
    }
    if (!(sbb > 0.0)) continue;
    const double coef = c_fixed ? *c_fixed : sby / sbb;
    if (!(coef > 0.0)) continue;
    double sse = 0.0;
    for (const auto& c : g.cells) {
      const double e = (coef * basis(c, x) - c.y) * c.w;
      sse += e * e;
    }
    if (sse < best.sse) best = {x, coef, sse};
  }
  if (!std::isfinite(best.sse)) throw ConvergenceFailure("no admissible starting point for pump power", FitResult{});
  return best;
}

HoleFitRow row_from(double n, double x, double x_se, double c, double c_se, bool converged, const ChannelSpec& spec) {
  HoleFitRow row;
  row.n_pump = n;
  row.value = x;
  row.stderr = x_se;
  row.converged = converged;
  row.shared = spec.shared_is_inverse ? 1.0 / c : c;
  row.shared_stderr = spec.shared_is_inverse ? c_se / (c * c) : c_se;
  return row;
}

ChannelFit fit_channel(const std::vector<Group>& groups, const ChannelSpec& spec, const HoleFitOptions& options,
                       const std::string& value_name) {
  ChannelFit out;
  out.channel = spec.channel;
  out.shared_name = spec.shared_name;
  const auto grid = scan_grid(groups);
  const std::optional<double> c_fixed =
      spec.fixed_shared ? std::optional<double>(to_linear(spec, *spec.fixed_shared)) : std::nullopt;
  const std::size_t P = groups.size();

  if (options.per_power_shared && options.mode == HoleFitMode::PerPower) {
    out.rows.resize(P);
    std::vector<FitResult> fits(P);
    parallel_for(P, options.threads, [&](std::size_t j) {
      const Group& g = groups[j];
      const ScanResult s = scan_power(g, spec.basis, grid, c_fixed);
      FitProblem problem;
      problem.names = {spec.shared_name, value_name};
      problem.initial.resize(2);
      problem.initial << s.c, s.x;
      problem.transforms = {c_fixed ? Transform::Fixed : Transform::LogPositive, Transform::LogPositive};
      problem.options = options.fit;
      problem.weights.resize(static_cast<Eigen::Index>(g.cells.size()));
      for (std::size_t i = 0; i < g.cells.size(); ++i) problem.weights[static_cast<Eigen::Index>(i)] = g.cells[i].w;
      problem.residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(g.cells.size()));
        for (std::size_t i = 0; i < g.cells.size(); ++i)
          r[static_cast<Eigen::Index>(i)] = p[0] * spec.basis(g.cells[i], p[1]) - g.cells[i].y;
        return r;
      };
      fits[j] = solve_least_squares(problem);
      const auto& f = fits[j];
      out.rows[j] = row_from(g.n, f.estimates[1], f.std_errors[1], f.estimates[0], f.std_errors[0], f.converged, spec);
    });
    out.converged = std::all_of(fits.begin(), fits.end(), [](const auto& f) { return f.converged; });
    double ss = 0.0;
    for (const auto& f : fits) {
      ss += f.residual_norm * f.residual_norm;
      out.fit.iterations += f.iterations;
    }
    out.fit.residual_norm = std::sqrt(ss);
    out.fit.converged = out.converged;
    out.fit.message = out.converged ? "all powers converged" : "some powers did not converge";
    std::vector<double> shared;
    for (const auto& r : out.rows) shared.push_back(r.shared);
    std::nth_element(shared.begin(), shared.begin() + static_cast<long>(P / 2), shared.end());
    out.shared = shared[P / 2];
    return out;
  }

  // Starting point: per-power scans, shared parameter from their median, then a rescan
  // of every power at that shared value.
  std::vector<ScanResult> scans(P);
  parallel_for(P, options.threads, [&](std::size_t j) { scans[j] = scan_power(groups[j], spec.basis, grid, c_fixed); });
  double c0 = c_fixed.value_or(0.0);
  if (!c_fixed) {
    std::vector<double> cs;
    for (const auto& s : scans) cs.push_back(s.c);
    std::nth_element(cs.begin(), cs.begin() + static_cast<long>(P / 2), cs.end());
    c0 = cs[P / 2];
    parallel_for(P, options.threads, [&](std::size_t j) { scans[j] = scan_power(groups[j], spec.basis, grid, c0); });
  }

  std::size_t total = 0;
  for (const auto& g : groups) total += g.cells.size();
  Eigen::VectorXd weights(static_cast<Eigen::Index>(total));
  {
    Eigen::Index k = 0;
    for (const auto& g : groups)
      for (const auto& c : g.cells) weights[k++] = c.w;
  }
  auto make_residual = [&](std::function<double(std::size_t, const Eigen::VectorXd&)> x_of) {
    return [&groups, &spec, x_of, total](const Eigen::VectorXd& p) {
      Eigen::VectorXd r(static_cast<Eigen::Index>(total));
      Eigen::Index k = 0;
      for (std::size_t j = 0; j < groups.size(); ++j) {
        const double x = x_of(j, p);
        for (const auto& c : groups[j].cells) r[k++] = p[0] * spec.basis(c, x) - c.y;
      }
      return r;
    };
  };

  FitProblem joint;
  joint.names.push_back(spec.shared_name);
  joint.initial.resize(static_cast<Eigen::Index>(P + 1));
  joint.initial[0] = c0;
  joint.transforms.assign(P + 1, Transform::LogPositive);
  if (c_fixed) joint.transforms[0] = Transform::Fixed;
  for (std::size_t j = 0; j < P; ++j) {
    joint.names.push_back(value_name + "[" + std::to_string(j) + "]");
    joint.initial[static_cast<Eigen::Index>(j + 1)] = scans[j].x;
  }
  joint.weights = weights;
  joint.options = options.fit;
  joint.residual = make_residual([](std::size_t j, const Eigen::VectorXd& p) { return p[static_cast<Eigen::Index>(j + 1)]; });
  FitResult per_power = solve_least_squares(joint);

  if (options.mode == HoleFitMode::PerPower) {
    for (std::size_t j = 0; j < P; ++j) {
      const auto k = static_cast<Eigen::Index>(j + 1);
      out.rows.push_back(row_from(groups[j].n, per_power.estimates[k], per_power.std_errors[k], per_power.estimates[0],
                                  per_power.std_errors[0], per_power.converged, spec));
    }
    out.shared = out.rows.front().shared;
    out.shared_stderr = out.rows.front().shared_stderr;
    out.converged = per_power.converged;
    out.fit = std::move(per_power);
    return out;
  }

  // Global: x = omega0 * n^k across all powers.
  std::vector<double> ns, xs;
  for (std::size_t j = 0; j < P; ++j) {
    ns.push_back(groups[j].n);
    xs.push_back(per_power.estimates[static_cast<Eigen::Index>(j + 1)]);
  }
  const double k0 = P >= 3 ? std::clamp(powerlaw_fit(ns, xs).exponent, 0.05, 0.95) : 0.5;
  double acc = 0.0;
  for (std::size_t j = 0; j < P; ++j) acc += std::log(xs[j]) - k0 * std::log(ns[j]);
  const double omega0 = std::exp(acc / static_cast<double>(P));
  FitProblem global;
  global.names = {spec.shared_name, "omega0_hz", "k"};
  global.initial.resize(3);
  global.initial << per_power.estimates[0], omega0, k0;
  global.transforms = {c_fixed ? Transform::Fixed : Transform::LogPositive, Transform::LogPositive, Transform::Identity};
  global.weights = weights;
  global.options = options.fit;
  global.residual = make_residual([&groups](std::size_t j, const Eigen::VectorXd& p) { return p[1] * std::pow(groups[j].n, p[2]); });
  FitResult g = solve_least_squares(global);

  out.global = RabiScaling{g.estimates[1], g.estimates[2]};
  out.omega0_stderr = g.std_errors[1];
  out.k_stderr = g.std_errors[2];
  for (std::size_t j = 0; j < P; ++j) {
    const double nk = std::pow(groups[j].n, g.estimates[2]);
    const double x = g.estimates[1] * nk;
    Eigen::Vector2d grad(nk, x * std::log(groups[j].n));
    const double var = grad.dot(g.covariance.block<2, 2>(1, 1) * grad);
    out.rows.push_back(row_from(groups[j].n, x, std::sqrt(std::max(var, 0.0)), g.estimates[0], g.std_errors[0],
                                g.converged, spec));
  }
  out.shared = out.rows.front().shared;
  out.shared_stderr = out.rows.front().shared_stderr;
  out.converged = g.converged;
  out.fit = std::move(g);
  return out;
}

constexpr double kShiftPrefactor = 3.0 * std::numbers::sqrt2 / 8.0;

ChannelSpec stm_spec(HoleChannel channel, const HoleFitOptions& options) {
  if (channel == HoleChannel::Loss)
    return {channel, "q_tls0", true,
            [](const Cell& c, double omega) { return c.thermal * (1.0 + stm_two_tone_loss(c.delta, omega)); },
            options.fixed_loss_shared};
  return {channel, "tan_delta", false,
          [](const Cell& c, double omega) {
            return -c.f_probe * c.thermal * kShiftPrefactor * detail::shift_kernel(c.delta, omega);
          },
          options.fixed_shift_shared};
}

ChannelSpec capelle_spec(HoleChannel channel, double n_c, const HoleFitOptions& options) {
  if (channel == HoleChannel::Loss)
    return {channel, "q_tls0", true,
            [n_c](const Cell& c, double gamma2) { return c.thermal * capelle_loss(c.delta, c.n / n_c, {1.0, gamma2}); },
            options.fixed_loss_shared};
  return {channel, "gamma0_hz", false,
          [n_c](const Cell& c, double gamma2) { return capelle_shift(c.delta, c.n / n_c, {1.0, gamma2}); },
          options.fixed_shift_shared};
}

}  // namespace

HoleFitSeries fit_hole_stm(const TwoToneMap& map, const ThermalContext& ctx, const HoleFitOptions& options) {
  HoleFitSeries out;
  out.model = HoleModel::Stm;
  out.mode = options.mode;
  out.quantity = "omega_hz";
  out.loss = fit_channel(build_groups(map, ctx, HoleChannel::Loss), stm_spec(HoleChannel::Loss, options), options,
                         "omega_hz");
  out.shift = fit_channel(build_groups(map, ctx, HoleChannel::Shift), stm_spec(HoleChannel::Shift, options), options,
                          "omega_hz");
  return out;
}

HoleFitSeries fit_hole_capelle(const TwoToneMap& map, double n_c, const ThermalContext& ctx,
                               const HoleFitOptions& options) {
  if (!(n_c > 0.0) || !std::isfinite(n_c)) throw DomainError("fit_hole_capelle: n_c must be positive");
  if (options.mode == HoleFitMode::Global)
    throw ValidationError("fit_hole_capelle: only per-power fits are defined for the uniform-coupling model");
  HoleFitSeries out;
  out.model = HoleModel::Capelle;
  out.mode = options.mode;
  out.quantity = "gamma2_hz";
  out.n_c = n_c;
  out.loss = fit_channel(build_groups(map, ctx, HoleChannel::Loss), capelle_spec(HoleChannel::Loss, n_c, options),
                         options, "gamma2_hz");
  out.shift = fit_channel(build_groups(map, ctx, HoleChannel::Shift), capelle_spec(HoleChannel::Shift, n_c, options),
                          options, "gamma2_hz");
  return out;
}

HoleFitSeries rabi_from_linewidth(const HoleFitSeries& series) {
  if (series.model != HoleModel::Capelle || series.quantity != "gamma2_hz" || !series.n_c)
    throw ValidationError("rabi_from_linewidth: needs a uniform-coupling linewidth series");
  HoleFitSeries out = series;
  out.quantity = "omega_hz";
  for (ChannelFit* ch : {&out.loss, &out.shift}) {
    for (auto& r : ch->rows) {
      const double factor = std::sqrt(1.0 + r.n_pump / *series.n_c);
      r.value = rabi_capelle(r.n_pump / *series.n_c, r.value);
      r.stderr *= factor;
    }
  }
  return out;
}

double predict_hole(const HoleFitSeries& series, HoleChannel channel, double delta_hz, double n_pump,
                    const ThermalContext& ctx) {
  const ChannelFit& ch = channel == HoleChannel::Loss ? series.loss : series.shift;
  const auto it = std::find_if(ch.rows.begin(), ch.rows.end(), [&](const auto& r) { return r.n_pump == n_pump; });
  if (it == ch.rows.end()) throw ValidationError("predict_hole: no fitted row at n_pump=" + std::to_string(n_pump));
  if (series.quantity != "gamma2_hz" && series.model == HoleModel::Capelle)
    throw ValidationError("predict_hole: uniform-coupling predictions need the linewidth series");
  Cell c;
  c.delta = delta_hz;
  c.f_probe = ctx.f_r_hz + delta_hz;
  c.thermal = thermal_factor({c.f_probe, ctx.temperature_k});
  c.n = n_pump;
  const HoleFitOptions none;
  const ChannelSpec spec = series.model == HoleModel::Stm ? stm_spec(channel, none)
                                                          : capelle_spec(channel, series.n_c.value(), none);
  return to_linear(spec, it->shared) * spec.basis(c, it->value);
}

// ---------------------------------------------------------------------------
// Scaling and T2
// ---------------------------------------------------------------------------

namespace {

struct Usable {
  std::vector<double> n, value, err;
};

Usable usable_rows(const ChannelFit& ch) {
  Usable u;
  bool weighted = true;
  for (const auto& r : ch.rows) {
    // an infinite stderr means the hole was not resolved at this power
    if (!r.converged || !(r.value > 0.0) || !std::isfinite(r.stderr)) continue;
    u.n.push_back(r.n_pump);
    u.value.push_back(r.value);
    u.err.push_back(r.stderr);
    weighted = weighted && std::isfinite(r.stderr) && r.stderr > 0.0;
  }
  if (u.n.size() < 3) throw DomainError("extract_scaling: need at least 3 converged powers per channel");
  if (!weighted) u.err.clear();
  return u;
}

}  // namespace

ScalingFit extract_scaling(const HoleFitSeries& series) {
  const Usable loss = usable_rows(series.loss);
  const Usable shift = usable_rows(series.shift);
  ScalingFit out;
  out.loss = powerlaw_fit(loss.n, loss.value, loss.err);
  out.shift = powerlaw_fit(shift.n, shift.value, shift.err);
  out.reference = powerlaw_fit_fixed_exponent(loss.n, loss.value, 0.5, loss.err);
  return out;
}

T2Report report_t2(const FitResult& saturation, const PowerLawFit& scaling) {
  if (scaling.exponent != 0.5)
    throw DomainError("report_t2: the T2 estimate needs the k=0.5 reference fit (Omega = Omega_0 sqrt(n))");
  T2Report out;
  out.n_c = saturation.value("n_c");
  out.omega0_hz = scaling.amplitude;
  out.t2_s = t2_estimate(out.omega0_hz, out.n_c);
  out.assumptions = {"k=0.5 forced", "T2=2*T1"};
  return out;
}

}  // namespace holeburn
