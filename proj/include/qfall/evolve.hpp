#pragma once

// Evolution under H = p^2/2m_i + F z with F = m_g g (gravity) or F = m_i a
// (uniformly accelerated frame). Two independent engines:
//  - closed form: moment propagation and the exact propagator built from free
//    spreading, a translation by g_eff t^2/2 and the accelerated-frame phase;
//  - a Strang split-step spectral solver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "qfall/core.hpp"
#include "qfall/fft.hpp"
#include "qfall/states.hpp"

namespace qfall {

enum class FrameMode { gravity, accelerated_frame };

inline const char* to_string(FrameMode m) {
  return m == FrameMode::gravity ? "gravity" : "accelerated_frame";
}

struct LinearPotentialParams {
  MassPair mass;
  double field_strength = 1.0;
  FrameMode mode = FrameMode::gravity;

  static LinearPotentialParams gravity(const MassPair& m, double g) {
    return {m, g, FrameMode::gravity};
  }
  static LinearPotentialParams accelerated_frame(const MassPair& m, double a) {
    return {m, a, FrameMode::accelerated_frame};
  }

  /// Mass coupling to the field: m_g under gravity, m_i in an accelerated frame.
  double coupling_mass() const {
    return mode == FrameMode::gravity ? mass.gravitational : mass.inertial;
  }
  /// Magnitude of the uniform downward force.
  double force() const { return coupling_mass() * field_strength; }
  double effective_acceleration() const { return force() / mass.inertial; }

  void validate() const {
    mass.validate();
    if (!(field_strength >= 0.0) || !std::isfinite(field_strength))
      throw ConfigError("field strength must be non-negative");
  }
};

/// Ehrenfest propagation of the first and second moments; exact for linear potentials.
inline MomentSet moment_evolution(const MomentSet& m0, const LinearPotentialParams& params, double t) {
  if (!(t >= 0.0)) throw PreconditionError("moment_evolution requires t >= 0");
  const double mi = params.mass.inertial;
  MomentSet m;
  m.mean_z = m0.mean_z + m0.mean_p / mi * t - 0.5 * params.effective_acceleration() * t * t;
  m.mean_p = m0.mean_p - params.force() * t;
  m.var_z = m0.var_z + 2.0 * m0.cov_zp * t / mi + m0.var_p * t * t / (mi * mi);
  m.var_p = m0.var_p;
  m.cov_zp = m0.cov_zp + m0.var_p * t / mi;
  return m;
}

/// Exact propagation of a sampled initial field by time t.
inline GridField exact_wavefunction(const GridField& initial, const LinearPotentialParams& params,
                                    const UnitSystem& units, double t) {
  params.validate();
  if (!(t >= 0.0)) throw PreconditionError("exact_wavefunction requires t >= 0");
  if (t == 0.0) return initial;

  const auto& grid = initial.grid;
  Fft fft(grid.size());
  const auto m0 = numeric_moments(initial, units, fft);
  const auto mt = moment_evolution(m0, params, t);
  const double reach = 8.0 * mt.sigma_z();
  if (mt.mean_z - reach < grid.z_min() || mt.mean_z + reach > grid.z_max())
    throw DomainError("propagated packet leaves the grid; enlarge the domain");

  const double mi = params.mass.inertial;
  const double geff = params.effective_acceleration();
  const double force = params.force();
  const double shift = 0.5 * geff * t * t;

  std::vector<complex> chi(initial.amplitudes);
  fft.forward(chi);
  for (std::size_t j = 0; j < chi.size(); ++j) {
    const double k = grid.wavenumber(j);
    chi[j] *= std::polar(1.0, -units.hbar * k * k * t / (2.0 * mi) + k * shift);
  }
  fft.inverse(chi);

  GridField out(grid);
  const double global = force * geff * t * t * t / (6.0 * units.hbar);
  for (std::size_t j = 0; j < chi.size(); ++j) {
    const double z = grid.position(j);
    out[j] = chi[j] * std::polar(1.0, -force * t * z / units.hbar - global);
  }
  if (boundary_probability(out) > kBoundaryGuardThreshold)
    throw DomainError("propagated packet reaches the grid boundary; enlarge the domain");
  return out;
}

inline GridField exact_wavefunction(const WavepacketSpec& spec, const LinearPotentialParams& params,
                                    double t, const SpatialGrid& grid, const UnitSystem& units) {
  return exact_wavefunction(build_wavefunction(spec, grid), params, units, t);
}

/// One Strang step: half potential kick, kinetic drift in k-space, half kick.
/// A negative dt runs the step backwards.
class SplitStepPropagator {
 public:
  SplitStepPropagator(const SpatialGrid& grid, const LinearPotentialParams& params,
                      const UnitSystem& units, double dt)
      : fft_(grid.size()), kick_(grid.size()), drift_(grid.size()), dt_(dt) {
    params.validate();
    const double force = params.force();
    const double mi = params.mass.inertial;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      kick_[j] = std::polar(1.0, -force * grid.position(j) * dt / (2.0 * units.hbar));
      const double k = grid.wavenumber(j);
      drift_[j] = std::polar(1.0, -units.hbar * k * k * dt / (2.0 * mi));
    }
  }

  double dt() const { return dt_; }
  Fft& fft() { return fft_; }

  void step(std::span<complex> psi) {
    for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= kick_[j];
    fft_.forward(psi);
    for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= drift_[j];
    fft_.inverse(psi);
    for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= kick_[j];
  }

 private:
  Fft fft_;
  std::vector<complex> kick_;
  std::vector<complex> drift_;
  double dt_;
};

struct SolverSettings {
  double dt = 0.0;
  std::size_t n_steps = 0;
  /// Moments (and optionally fields) are recorded every `snapshot_stride` steps and at the end.
  std::size_t snapshot_stride = 1;
  bool store_fields = false;
  /// Optional detector probe sampled every step inside [probe_from, probe_to].
  std::optional<double> probe_z;
  double probe_from = 0.0;
  double probe_to = std::numeric_limits<double>::infinity();
  double guard_threshold = kBoundaryGuardThreshold;
  std::size_t guard_width = kBoundaryGuardWidth;
};

/// psi and d psi/dz at a fixed plane, plus the probability below it, sampled per step.
struct ProbeTrace {
  double z = 0.0;
  std::vector<double> times;
  std::vector<complex> value;
  std::vector<complex> derivative;
  std::vector<double> probability_below;
};

struct EvolutionResult {
  std::vector<double> times;
  std::vector<GridField> fields;
  std::vector<MomentSet> moments;
  std::vector<double> norms;
  std::optional<ProbeTrace> probe;
  double dt = 0.0;
  SpatialGrid grid;

  double max_norm_drift() const {
    double d = 0.0;
    for (double n : norms) d = std::max(d, std::abs(1.0 - n));
    return d;
  }
};

/// Requires hbar * k_max >= 2 max(|<p>(0)|, |<p>(t_final)|).
inline void check_nyquist(const SpatialGrid& grid, const MomentSet& m0,
                          const LinearPotentialParams& params, const UnitSystem& units, double t_final) {
  const double p_end = m0.mean_p - params.force() * t_final;
  const double p_max = std::max(std::abs(m0.mean_p), std::abs(p_end));
  if (units.hbar * grid.max_wavenumber() < 2.0 * p_max)
    throw ConfigError("grid too coarse: k_max = " + std::to_string(grid.max_wavenumber()) +
                      " does not cover twice the peak momentum " + std::to_string(p_max / units.hbar));
}

inline double probability_below(std::span<const complex> psi, const SpatialGrid& grid, double z) {
  double s = 0.0;
  for (std::size_t j = 0; j < psi.size() && grid.position(j) < z; ++j) s += std::norm(psi[j]);
  return s * grid.spacing();
}

inline EvolutionResult split_step_evolve(const GridField& initial, const LinearPotentialParams& params,
                                         const UnitSystem& units, const SolverSettings& settings) {
  params.validate();
  if (!(settings.dt > 0.0)) throw PreconditionError("split_step_evolve requires dt > 0");
  if (settings.n_steps == 0) throw PreconditionError("split_step_evolve requires n_steps > 0");
  if (settings.snapshot_stride == 0) throw ConfigError("snapshot stride must be >= 1");

  const auto& grid = initial.grid;
  SplitStepPropagator prop(grid, params, units, settings.dt);
  const double dz = grid.spacing();
  const double t_final = settings.dt * static_cast<double>(settings.n_steps);

  EvolutionResult res;
  res.dt = settings.dt;
  res.grid = grid;
  const auto m0 = numeric_moments(initial, units, prop.fft());
  check_nyquist(grid, m0, params, units, t_final);

  std::optional<SpectralProbe> probe;
  if (settings.probe_z) {
    probe.emplace(grid, *settings.probe_z);
    res.probe = ProbeTrace{};
    res.probe->z = *settings.probe_z;
  }

  std::vector<complex> psi(initial.amplitudes);
  auto record_snapshot = [&](double t, const MomentSet& m) {
    res.times.push_back(t);
    res.moments.push_back(m);
    res.norms.push_back(std::sqrt(norm_squared(GridField(grid, psi))));
    if (settings.store_fields) res.fields.emplace_back(grid, psi);
  };
  const double eps_t = 1e-9 * settings.dt;
  auto record_probe = [&](double t) {
    if (!probe || t < settings.probe_from - eps_t || t > settings.probe_to + eps_t) return;
    res.probe->times.push_back(t);
    res.probe->value.push_back(probe->value(psi));
    res.probe->derivative.push_back(probe->derivative(psi));
    res.probe->probability_below.push_back(probability_below(psi, grid, probe->position()));
  };

  record_snapshot(0.0, m0);
  record_probe(0.0);
  for (std::size_t s = 1; s <= settings.n_steps; ++s) {
    prop.step(psi);
    if (boundary_probability(psi, dz, settings.guard_width) > settings.guard_threshold)
      throw SolverError("probability reached the grid boundary", s);
    const double t = settings.dt * static_cast<double>(s);
    record_probe(t);
    if (s % settings.snapshot_stride == 0 || s == settings.n_steps)
      record_snapshot(t, numeric_moments(GridField(grid, psi), units, prop.fft()));
  }
  return res;
}

/// Picks a domain and power-of-two size covering every packet over [0, t_final]:
/// mean +- 10 sigma of the propagated moments, the initial peaks +- 8 D0, the
/// detector plane, and twice the peak momentum plus 10 momentum widths.
inline SpatialGrid plan_grid(std::span<const WavepacketSpec> specs, const LinearPotentialParams& params,
                             const UnitSystem& units, double t_final,
                             std::optional<double> z_detector = std::nullopt,
                             std::size_t max_points = std::size_t{1} << 16) {
  if (specs.empty()) throw ConfigError("plan_grid needs at least one state");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double k_need = 0.0;
  for (const auto& spec : specs) {
    const auto m0 = analytic_moments(spec, units);
    const double d = spec.effective_delta();
    lo = std::min(lo, spec.z0 - d - 8.0 * spec.delta0);
    hi = std::max(hi, spec.z0 + d + 8.0 * spec.delta0);
    constexpr int samples = 128;
    for (int i = 0; i <= samples; ++i) {
      const double t = t_final * i / samples;
      const auto m = moment_evolution(m0, params, t);
      lo = std::min(lo, m.mean_z - 10.0 * m.sigma_z());
      hi = std::max(hi, m.mean_z + 10.0 * m.sigma_z());
    }
    const double p_max = std::max(std::abs(m0.mean_p), std::abs(m0.mean_p - params.force() * t_final));
    const double p_width = std::max(m0.sigma_p(), units.hbar / (std::sqrt(2.0) * spec.delta0));
    k_need = std::max(k_need, std::max(2.0 * p_max, p_max + 10.0 * p_width) / units.hbar);
  }
  if (z_detector) {
    lo = std::min(lo, *z_detector - 1.0);
    hi = std::max(hi, *z_detector + 1.0);
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double n_real = std::ceil(k_need * (hi - lo) / std::numbers::pi);
  std::size_t n = 256;
  while (static_cast<double>(n) < n_real) n <<= 1;
  if (n > max_points)
    throw ConfigError("required grid of " + std::to_string(n) + " points exceeds the limit of " +
                      std::to_string(max_points));
  return make_grid(lo, hi, n);
}

/// Default time step: the fall time divided by 4096.
inline constexpr std::size_t kStepsPerFall = 4096;

struct OrderCheck {
  std::vector<double> dts;
  std::vector<double> errors;  // L2 distance to exact_wavefunction at t_final
  double ratio = 0.0;          // errors[n-2] / errors[n-1]
  double refined_dt = 0.0;
  double refined_error = 0.0;
};

inline double split_step_error(const GridField& initial, const LinearPotentialParams& params,
                               const UnitSystem& units, double t_final, std::size_t n_steps,
                               const GridField& exact) {
  SplitStepPropagator prop(initial.grid, params, units, t_final / static_cast<double>(n_steps));
  std::vector<complex> psi(initial.amplitudes);
  for (std::size_t s = 0; s < n_steps; ++s) prop.step(psi);
  return l2_distance(GridField(initial.grid, std::move(psi)), exact);
}

/// Errors at dt = t_final/(n_steps 2^k), k = 0..halvings. `ratio` compares the last two
/// steps and `refined_dt` is the finest one. For a linear potential the splitting error
/// is a global phase F^2 dt^2 t/(24 hbar m_i), so the ratio is 4.
inline OrderCheck strang_order_check(const GridField& initial, const LinearPotentialParams& params,
                                     const UnitSystem& units, double t_final, std::size_t n_steps,
                                     int halvings = 3) {
  if (halvings < 1) throw ConfigError("order check needs at least one halving");
  const auto exact = exact_wavefunction(initial, params, units, t_final);
  OrderCheck oc;
  for (int k = 0; k <= halvings; ++k, n_steps *= 2) {
    oc.dts.push_back(t_final / static_cast<double>(n_steps));
    oc.errors.push_back(split_step_error(initial, params, units, t_final, n_steps, exact));
  }
  oc.ratio = oc.errors[oc.errors.size() - 2] / oc.errors.back();
  oc.refined_dt = oc.dts.back();
  oc.refined_error = oc.errors.back();
  return oc;
}

}  // namespace qfall
