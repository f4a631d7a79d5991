#pragma once

// Time-of-flight estimators: the Ehrenfest crossing time, the semiclassical spread
// sigma_z(T)/v_z(T) with its asymptotic form, and an arrival-time density built from
// the probability current through the detector plane.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "qfall/evolve.hpp"
#include "qfall/states.hpp"

namespace qfall {

/// Smallest positive root of <z>(t) = z_detector.
inline double ehrenfest_tof(const MomentSet& m0, const LinearPotentialParams& params, double z_detector) {
  params.validate();
  const double v0 = m0.mean_p / params.mass.inertial;
  const double h = m0.mean_z - z_detector;
  const double g = params.effective_acceleration();
  if (g == 0.0) {
    if (v0 != 0.0 && -h / v0 > 0.0) return -h / v0;
    throw NoCrossingError("mean trajectory never reaches the detector");
  }
  // g/2 t^2 - v0 t - h = 0
  const double disc = v0 * v0 + 2.0 * g * h;
  if (disc < 0.0) throw NoCrossingError("mean trajectory turns before reaching the detector");
  const double sq = std::sqrt(disc);
  // Stable pair of roots.
  const double q = v0 >= 0.0 ? v0 + sq : v0 - sq;
  double r1 = q / g;
  double r2 = q != 0.0 ? -2.0 * h / q : 0.0;
  if (r1 > r2) std::swap(r1, r2);
  if (r1 > 0.0) return r1;
  if (r2 > 0.0) return r2;
  throw NoCrossingError("detector crossing lies in the past");
}

inline double ehrenfest_tof(const WavepacketSpec& spec, const LinearPotentialParams& params,
                            const UnitSystem& units, double z_detector) {
  return ehrenfest_tof(analytic_moments(spec, units), params, z_detector);
}

/// sqrt(var_p / var_p(Gaussian of the same D0)); 1 for a Gaussian.
inline double epsilon_factor(const WavepacketSpec& spec, const UnitSystem& units) {
  const double ref = units.hbar * units.hbar / (2.0 * spec.delta0 * spec.delta0);
  return std::sqrt(analytic_moments(spec, units).var_p / ref);
}

struct SpreadEstimate {
  double sigma_full = 0.0;        // sqrt(var_z(T)) / |v_z(T)|
  double sigma_asymptotic = 0.0;  // (sqrt2/2) eps hbar / (D0 m_coupling field)
};

inline SpreadEstimate semiclassical_sigma_tof(const WavepacketSpec& spec, const LinearPotentialParams& params,
                                              const UnitSystem& units, double z_detector) {
  const auto m0 = analytic_moments(spec, units);
  const double t = ehrenfest_tof(m0, params, z_detector);
  const auto mt = moment_evolution(m0, params, t);
  const double v = mt.mean_p / params.mass.inertial;
  if (v == 0.0 || params.force() == 0.0)
    throw NoCrossingError("degenerate crossing: zero velocity at the detector");
  SpreadEstimate s;
  s.sigma_full = mt.sigma_z() / std::abs(v);
  s.sigma_asymptotic = std::numbers::sqrt2 / 2.0 * epsilon_factor(spec, units) * units.hbar /
                       (spec.delta0 * params.force());
  return s;
}

struct TofWindow {
  double t_min = 0.0;
  double t_max = 0.0;
  bool contains(double t) const { return t >= t_min && t <= t_max; }
};

/// Predicted crossing +- n_sigma * max(sigma_full, sigma_asymptotic), clipped at t = 0.
inline TofWindow predicted_window(const WavepacketSpec& spec, const LinearPotentialParams& params,
                                  const UnitSystem& units, double z_detector, double n_sigma = 8.0) {
  const double t = ehrenfest_tof(spec, params, units, z_detector);
  const auto s = semiclassical_sigma_tof(spec, params, units, z_detector);
  const double w = n_sigma * std::max(s.sigma_full, s.sigma_asymptotic);
  return {std::max(0.0, t - w), t + w};
}

/// J(z_detector, t) = (hbar/m_i) Im(psi* dpsi/dz), with the probability below the
/// detector at the first and last sample.
struct CurrentTrace {
  double z = 0.0;
  std::vector<double> times;
  std::vector<double> current;
  std::vector<double> probability_below;
};

inline CurrentTrace current_trace(const EvolutionResult& result, const LinearPotentialParams& params,
                                  const UnitSystem& units, double z_detector) {
  const double scale = units.hbar / params.mass.inertial;
  CurrentTrace tr;
  tr.z = z_detector;
  if (result.probe && result.probe->z == z_detector) {
    const auto& p = *result.probe;
    tr.times = p.times;
    tr.probability_below = p.probability_below;
    tr.current.reserve(p.times.size());
    for (std::size_t i = 0; i < p.times.size(); ++i)
      tr.current.push_back(scale * std::imag(std::conj(p.value[i]) * p.derivative[i]));
    return tr;
  }
  if (result.fields.size() != result.times.size() || result.fields.empty())
    throw ConfigError("evolution result carries neither fields nor a probe at the detector");
  const SpectralProbe probe(result.grid, z_detector);
  for (std::size_t i = 0; i < result.fields.size(); ++i) {
    const auto psi = result.fields[i].span();
    tr.times.push_back(result.times[i]);
    tr.current.push_back(scale * std::imag(std::conj(probe.value(psi)) * probe.derivative(psi)));
    tr.probability_below.push_back(probability_below(psi, result.grid, z_detector));
  }
  return tr;
}

/// Weighted sum of traces sampled on identical time grids (diagonal mixtures).
inline CurrentTrace combine_traces(const std::vector<std::pair<double, CurrentTrace>>& parts) {
  if (parts.empty()) throw PreconditionError("no traces to combine");
  CurrentTrace out = parts.front().second;
  std::fill(out.current.begin(), out.current.end(), 0.0);
  std::fill(out.probability_below.begin(), out.probability_below.end(), 0.0);
  for (const auto& [w, tr] : parts) {
    if (tr.times != out.times) throw PreconditionError("traces are sampled on different time grids");
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      out.current[i] += w * tr.current[i];
      out.probability_below[i] += w * tr.probability_below[i];
    }
  }
  return out;
}

struct TofDistribution {
  std::vector<double> times;
  std::vector<double> density;
  std::vector<double> cumulative;
  double mean_t = 0.0;
  double std_t = 0.0;
  TofWindow window;
  double clipped_negativity = 0.0;  // integral of the removed upward current
  double flux_captured = 0.0;       // net probability crossing inside the window
  bool capture_warning = false;     // flux_captured < 0.999
};

struct QuadratureMoments {
  double integral = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Trapezoid-rule integral, mean and standard deviation of a sampled density.
inline QuadratureMoments quadrature_moments(const std::vector<double>& t, const std::vector<double>& f) {
  QuadratureMoments q;
  double m1 = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double h = 0.5 * (t[i] - t[i - 1]);
    q.integral += h * (f[i] + f[i - 1]);
    m1 += h * (t[i] * f[i] + t[i - 1] * f[i - 1]);
  }
  q.mean = m1 / q.integral;
  double m2 = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double h = 0.5 * (t[i] - t[i - 1]);
    const double a = t[i] - q.mean;
    const double b = t[i - 1] - q.mean;
    m2 += h * (a * a * f[i] + b * b * f[i - 1]);
  }
  q.stddev = std::sqrt(m2 / q.integral);
  return q;
}

inline constexpr double kFluxCaptureThreshold = 0.999;

/// Arrival density max(0, -J) restricted to the window and normalized to unit integral.
inline TofDistribution distribution_from_current(const CurrentTrace& trace, const TofWindow& window) {
  if (trace.times.empty()) throw ConfigError("empty current trace");
  const double slack = 1e-9 * std::max(1.0, window.t_max);
  if (window.t_min < trace.times.front() - slack || window.t_max > trace.times.back() + slack)
    throw ConfigError("time-of-flight window escapes the simulated time range");

  TofDistribution d;
  d.window = window;
  std::vector<double> negative;
  std::size_t first = trace.times.size();
  std::size_t last = 0;
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    const double t = trace.times[i];
    if (t < window.t_min - slack || t > window.t_max + slack) continue;
    first = std::min(first, i);
    last = i;
    d.times.push_back(t);
    d.density.push_back(std::max(0.0, -trace.current[i]));
    negative.push_back(std::max(0.0, trace.current[i]));
  }
  if (d.times.size() < 3) throw ConfigError("time-of-flight window holds fewer than 3 samples");

  const auto raw = quadrature_moments(d.times, d.density);
  if (!(raw.integral > 0.0)) throw SolverError("no downward flux through the detector in the window", last);
  d.clipped_negativity = quadrature_moments(d.times, negative).integral;
  if (!std::isfinite(d.clipped_negativity)) d.clipped_negativity = 0.0;
  for (auto& v : d.density) v /= raw.integral;
  const auto q = quadrature_moments(d.times, d.density);
  d.mean_t = q.mean;
  d.std_t = q.stddev;
  d.cumulative.assign(d.times.size(), 0.0);
  for (std::size_t i = 1; i < d.times.size(); ++i)
    d.cumulative[i] = d.cumulative[i - 1] + 0.5 * (d.times[i] - d.times[i - 1]) * (d.density[i] + d.density[i - 1]);
  d.flux_captured = trace.probability_below[last] - trace.probability_below[first];
  d.capture_warning = d.flux_captured < kFluxCaptureThreshold;
  return d;
}

inline TofDistribution current_tof_distribution(const EvolutionResult& result, const LinearPotentialParams& params,
                                                const UnitSystem& units, double z_detector,
                                                const TofWindow& window) {
  return distribution_from_current(current_trace(result, params, units, z_detector), window);
}

struct DistributionDistance {
  double l1 = 0.0;
  double ks = 0.0;
};

namespace detail {
inline double sample_linear(const std::vector<double>& t, const std::vector<double>& f, double x) {
  if (x < t.front() || x > t.back()) return 0.0;
  auto it = std::upper_bound(t.begin(), t.end(), x);
  if (it == t.end()) return f.back();
  const std::size_t i = static_cast<std::size_t>(it - t.begin());
  if (i == 0) return f.front();
  const double w = (x - t[i - 1]) / (t[i] - t[i - 1]);
  return (1.0 - w) * f[i - 1] + w * f[i];
}
inline double sample_cumulative(const std::vector<double>& t, const std::vector<double>& c, double x) {
  if (x < t.front()) return 0.0;
  if (x > t.back()) return c.back();
  return sample_linear(t, c, x);
}
}  // namespace detail

/// L1 distance of the densities and Kolmogorov-Smirnov distance of the cumulatives,
/// both on a common grid spanning the union of the windows with the finer step.
inline DistributionDistance distribution_distance(const TofDistribution& a, const TofDistribution& b) {
  const double lo = std::max(a.times.front(), b.times.front());
  const double hi = std::min(a.times.back(), b.times.back());
  if (lo > hi) throw ConfigError("time-of-flight windows are disjoint");
  if (a.times == b.times) {
    DistributionDistance d;
    for (std::size_t i = 1; i < a.times.size(); ++i) {
      const double h = 0.5 * (a.times[i] - a.times[i - 1]);
      d.l1 += h * (std::abs(a.density[i] - b.density[i]) + std::abs(a.density[i - 1] - b.density[i - 1]));
    }
    for (std::size_t i = 0; i < a.times.size(); ++i)
      d.ks = std::max(d.ks, std::abs(a.cumulative[i] - b.cumulative[i]));
    return d;
  }
  auto step_of = [](const TofDistribution& d) { return (d.times.back() - d.times.front()) / static_cast<double>(d.times.size() - 1); };
  const double t0 = std::min(a.times.front(), b.times.front());
  const double t1 = std::max(a.times.back(), b.times.back());
  const double h = std::min(step_of(a), step_of(b));
  const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / h));
  DistributionDistance d;
  double prev = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = std::min(t0 + static_cast<double>(i) * h, t1);
    const double diff = std::abs(detail::sample_linear(a.times, a.density, t) - detail::sample_linear(b.times, b.density, t));
    if (i > 0) d.l1 += 0.5 * (t - std::min(t0 + static_cast<double>(i - 1) * h, t1)) * (diff + prev);
    prev = diff;
    d.ks = std::max(d.ks, std::abs(detail::sample_cumulative(a.times, a.cumulative, t) -
                                   detail::sample_cumulative(b.times, b.cumulative, t)));
  }
  return d;
}

// End-to-end arrival-time simulation.

struct TofRunSettings {
  std::size_t steps_per_fall = kStepsPerFall;
  double n_sigma = 8.0;
  std::size_t snapshot_stride = 64;
  bool store_fields = false;
  std::optional<SpatialGrid> grid;  // planned automatically when absent
  std::optional<double> dt;         // shortest fall time / steps_per_fall when absent
};

struct TofRun {
  SpatialGrid grid;
  double dt = 0.0;
  std::size_t n_steps = 0;
  TofWindow window;
  CurrentTrace trace;
  TofDistribution distribution;
  std::vector<EvolutionResult> evolutions;  // one per mixture component
  double ehrenfest_tracking = 0.0;          // max |<z>_split - <z>_exact|
  double solver_tolerance = 0.0;            // tracking / |v(T)| + dt^2, in time units
  double max_norm_drift = 0.0;
  bool window_extended = false;
};

namespace detail {
inline TofRun simulate_once(const std::vector<std::pair<double, WavepacketSpec>>& states,
                            const LinearPotentialParams& params, const UnitSystem& units,
                            double z_detector, const TofRunSettings& settings, double n_sigma) {
  TofRun run;
  run.window = {std::numeric_limits<double>::infinity(), 0.0};
  double t_fall = std::numeric_limits<double>::infinity();
  double v_cross = std::numeric_limits<double>::infinity();
  std::vector<WavepacketSpec> specs;
  for (const auto& [w, spec] : states) {
    const auto win = predicted_window(spec, params, units, z_detector, n_sigma);
    run.window.t_min = std::min(run.window.t_min, win.t_min);
    run.window.t_max = std::max(run.window.t_max, win.t_max);
    const double t = ehrenfest_tof(spec, params, units, z_detector);
    t_fall = std::min(t_fall, t);
    const auto mt = moment_evolution(analytic_moments(spec, units), params, t);
    v_cross = std::min(v_cross, std::abs(mt.mean_p / params.mass.inertial));
    specs.push_back(spec);
  }
  run.dt = settings.dt.value_or(t_fall / static_cast<double>(settings.steps_per_fall));
  run.n_steps = static_cast<std::size_t>(std::ceil(run.window.t_max / run.dt));
  const double t_end = run.dt * static_cast<double>(run.n_steps);
  // Window edges sit on the step lattice so the probe samples cover it exactly.
  run.window.t_min = run.dt * std::floor(run.window.t_min / run.dt);
  run.window.t_max = t_end;
  run.grid = settings.grid ? *settings.grid : plan_grid(specs, params, units, t_end, z_detector);

  SolverSettings ss;
  ss.dt = run.dt;
  ss.n_steps = run.n_steps;
  ss.snapshot_stride = settings.snapshot_stride;
  ss.store_fields = settings.store_fields;
  ss.probe_z = z_detector;
  ss.probe_from = run.window.t_min;
  ss.probe_to = run.window.t_max;

  std::vector<std::pair<double, CurrentTrace>> traces;
  for (const auto& [w, spec] : states) {
    auto res = split_step_evolve(build_wavefunction(spec, run.grid), params, units, ss);
    const auto m0 = analytic_moments(spec, units);
    for (std::size_t i = 0; i < res.times.size(); ++i) {
      const auto exact = moment_evolution(m0, params, res.times[i]);
      run.ehrenfest_tracking = std::max(run.ehrenfest_tracking, std::abs(res.moments[i].mean_z - exact.mean_z));
    }
    run.max_norm_drift = std::max(run.max_norm_drift, res.max_norm_drift());
    traces.emplace_back(w, current_trace(res, params, units, z_detector));
    run.evolutions.push_back(std::move(res));
  }
  run.trace = traces.size() == 1 ? traces.front().second : combine_traces(traces);
  run.distribution = distribution_from_current(run.trace, run.window);
  run.solver_tolerance = run.ehrenfest_tracking / v_cross + run.dt * run.dt;
  return run;
}
}  // namespace detail

/// Evolves each weighted component with the split-step solver and builds the arrival
/// density of the (diagonal) mixture. The window is widened once if it misses flux.
inline TofRun simulate_tof(const std::vector<std::pair<double, WavepacketSpec>>& states,
                           const LinearPotentialParams& params, const UnitSystem& units, double z_detector,
                           const TofRunSettings& settings = {}) {
  if (states.empty()) throw ConfigError("simulate_tof needs at least one state");
  auto run = detail::simulate_once(states, params, units, z_detector, settings, settings.n_sigma);
  if (run.distribution.capture_warning) {
    auto wider = detail::simulate_once(states, params, units, z_detector, settings, 1.5 * settings.n_sigma);
    wider.window_extended = true;
    return wider;
  }
  return run;
}

inline TofRun simulate_tof(const WavepacketSpec& spec, const LinearPotentialParams& params,
                           const UnitSystem& units, double z_detector, const TofRunSettings& settings = {}) {
  return simulate_tof({{1.0, spec}}, params, units, z_detector, settings);
}

}  // namespace qfall
