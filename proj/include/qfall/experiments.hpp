#pragma once

// Gedankenexperiment drivers: two-mass drops, gravity vs accelerated-frame
// comparisons, mass/state sweeps and pure-vs-decohered cats.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qfall/digest.hpp"
#include "qfall/prepare.hpp"
#include "qfall/tof.hpp"

namespace qfall {

inline constexpr const char* kVersion = "1.0.0";

struct Particle {
  std::string label;
  WavepacketSpec spec;
  MassPair mass;
};

struct SweepAxes {
  std::vector<double> gravitational_masses{1.0, 2.0, 4.0, 8.0, 16.0};
  std::vector<double> mass_ratios{1.0, 2.0, 4.0, 8.0, 16.0};  // m_i / m_g
  std::vector<std::string> state_kinds{"gaussian", "male", "female", "yurke_stoler"};
  std::vector<double> thetas;        // extra cat phases at the base geometry
  std::size_t random_thetas = 0;     // additional phases drawn with `seed`
  bool simulate = false;             // run the split-step solver for every point
};

enum class ExperimentKind { drop, ep_test, sweep, decohere };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::drop: return "drop";
    case ExperimentKind::ep_test: return "ep-test";
    case ExperimentKind::sweep: return "sweep";
    case ExperimentKind::decohere: return "decohere";
  }
  return "unknown";
}

struct ExperimentConfig {
  UnitSystem units;
  std::vector<Particle> particles;
  double acceleration = 1.0;  // accelerated-frame field strength
  double z_detector = 0.0;
  TofRunSettings solver;
  SweepAxes sweep;
  bool auto_match = true;
  double match_tolerance = 1e-9;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string output_dir = "out";
  std::vector<std::string> warnings;

  void validate() const {
    units.validate();
    if (particles.empty()) throw ConfigError("at least one particle is required");
    for (const auto& p : particles) {
      p.spec.validate();
      p.mass.validate();
    }
    if (!(acceleration >= 0.0)) throw ConfigError("acceleration must be non-negative");
    if (solver.steps_per_fall < 16) throw ConfigError("steps_per_fall must be >= 16");
    if (solver.snapshot_stride == 0) throw ConfigError("snapshot_stride must be >= 1");
    if (threads == 0) throw ConfigError("threads must be >= 1");
  }
};

/// Named shapes at a given geometry: gaussian, male, female, yurke_stoler.
inline WavepacketSpec preset_state(const std::string& name, double z0, double delta, double delta0) {
  if (name == "gaussian") return WavepacketSpec::gaussian(z0, delta0);
  if (name == "male") return WavepacketSpec::male(z0, delta, delta0);
  if (name == "female") return WavepacketSpec::female(z0, delta, delta0);
  if (name == "yurke_stoler") return WavepacketSpec::yurke_stoler(z0, delta, delta0);
  throw ConfigError("unknown state preset '" + name + "'");
}

/// Canonical text of everything that influences results (not threads or paths).
inline std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream os;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << '=' << v << '\n'; };
  auto num = [](double v) { return format_double(v); };
  auto list = [&](const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + num(xs[i]);
    return s;
  };
  os << "[experiment]\n";
  kv("acceleration", num(c.acceleration));
  kv("auto_match", c.auto_match ? "true" : "false");
  kv("match_tolerance", num(c.match_tolerance));
  kv("seed", std::to_string(c.seed));
  kv("z_detector", num(c.z_detector));
  if (c.solver.grid) {
    os << "[grid]\n";
    kv("n_points", std::to_string(c.solver.grid->size()));
    kv("z_max", num(c.solver.grid->z_max()));
    kv("z_min", num(c.solver.grid->z_min()));
  }
  for (const auto& p : c.particles) {
    os << "[particle." << p.label << "]\n";
    for (const auto& [k, v] : to_record(p.spec)) kv(k, v);
    kv("m_gravitational", num(p.mass.gravitational));
    kv("m_inertial", num(p.mass.inertial));
  }
  os << "[solver]\n";
  if (c.solver.dt) kv("dt", num(*c.solver.dt));
  kv("n_sigma", num(c.solver.n_sigma));
  kv("snapshot_stride", std::to_string(c.solver.snapshot_stride));
  kv("steps_per_fall", std::to_string(c.solver.steps_per_fall));
  os << "[sweep]\n";
  kv("kinds", [&] {
    std::string s;
    for (std::size_t i = 0; i < c.sweep.state_kinds.size(); ++i) s += (i ? "," : "") + c.sweep.state_kinds[i];
    return s;
  }());
  kv("m_gravitational", list(c.sweep.gravitational_masses));
  kv("mass_ratio", list(c.sweep.mass_ratios));
  kv("random_thetas", std::to_string(c.sweep.random_thetas));
  kv("simulate", c.sweep.simulate ? "true" : "false");
  kv("thetas", list(c.sweep.thetas));
  os << "[units]\n";
  kv("g", num(c.units.g));
  kv("hbar", num(c.units.hbar));
  kv("length_ref", num(c.units.length_ref));
  kv("mass_ref", num(c.units.mass_ref));
  return os.str();
}

inline std::string config_digest(const ExperimentConfig& c) { return short_digest(canonical_text(c)); }

struct RunRecord {
  std::string digest;
  std::string label;
  std::string group;  // sweep axis or role
  FrameMode mode = FrameMode::gravity;
  WavepacketSpec spec;
  MassPair mass;
  double field_strength = 0.0;
  double initial_mean_p = 0.0;
  double t_ehrenfest = 0.0;
  double sigma_full = 0.0;
  double sigma_asymptotic = 0.0;
  double epsilon = 0.0;
  bool simulated = false;
  TofDistribution distribution;
  double solver_tolerance = 0.0;
  double max_norm_drift = 0.0;
  std::vector<EvolutionResult> evolutions;  // kept only when fields are stored
};

struct DistanceRecord {
  std::string label;
  double l1 = 0.0;
  double ks = 0.0;
  bool pass = false;
};

struct FitResult {
  std::string label;
  double exponent = 0.0;
  double stderr_exponent = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

struct RunManifest {
  std::string config_digest;
  std::string canonical_config;
  UnitSystem units;
  std::string tool_version = kVersion;
  std::size_t threads = 1;
  std::string solver_summary;
  std::vector<std::string> warnings;
};

struct ExperimentReport {
  ExperimentKind experiment = ExperimentKind::drop;
  RunManifest manifest;
  std::vector<RunRecord> records;
  std::vector<DistanceRecord> distances;
  std::vector<FitResult> fits;
  std::map<std::string, double> metrics;
  std::map<std::string, bool> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second; });
  }
  const RunRecord& record(const std::string& label) const {
    for (const auto& r : records)
      if (r.label == label) return r;
    throw std::out_of_range("no record labelled " + label);
  }
};

/// Ordinary least squares of log(y) on log(x).
inline FitResult fit_power_law(const std::string& label, const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw ConfigError("power-law fit needs at least 3 points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  FitResult f;
  f.label = label;
  f.points = x.size();
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = std::log(y[i]) - (f.intercept + f.exponent * std::log(x[i]));
    ssr += r * r;
  }
  f.stderr_exponent = std::sqrt(ssr / (n - 2.0) / sxx);
  return f;
}

/// Runs `n` independent tasks on at most `threads` workers; rethrows the first failure.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(threads, n); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            task(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

inline RunRecord make_record(const std::string& cfg_digest, const std::string& label, const std::string& group,
                             const WavepacketSpec& spec, const LinearPotentialParams& params,
                             const UnitSystem& units, double z_detector) {
  RunRecord r;
  r.label = label;
  r.group = group;
  r.mode = params.mode;
  r.spec = spec;
  r.mass = params.mass;
  r.field_strength = params.field_strength;
  std::ostringstream key;
  key << cfg_digest << '|' << group << '|' << label << '|' << to_string(params.mode) << '|'
      << format_double(params.mass.inertial) << '|' << format_double(params.mass.gravitational) << '|'
      << format_double(params.field_strength);
  for (const auto& [k, v] : to_record(spec)) key << '|' << k << '=' << v;
  r.digest = short_digest(key.str());
  r.initial_mean_p = analytic_moments(spec, units).mean_p;
  r.t_ehrenfest = ehrenfest_tof(spec, params, units, z_detector);
  const auto s = semiclassical_sigma_tof(spec, params, units, z_detector);
  r.sigma_full = s.sigma_full;
  r.sigma_asymptotic = s.sigma_asymptotic;
  r.epsilon = epsilon_factor(spec, units);
  return r;
}

inline void attach_run(RunRecord& r, TofRun&& run, bool keep_fields) {
  r.simulated = true;
  r.distribution = std::move(run.distribution);
  r.solver_tolerance = run.solver_tolerance;
  r.max_norm_drift = run.max_norm_drift;
  if (keep_fields) r.evolutions = std::move(run.evolutions);
}

inline void simulate_record(RunRecord& r, const std::vector<std::pair<double, WavepacketSpec>>& states,
                            const LinearPotentialParams& params, const ExperimentConfig& c) {
  attach_run(r, simulate_tof(states, params, c.units, c.z_detector, c.solver), c.solver.store_fields);
}

inline ExperimentReport start_report(ExperimentKind kind, const ExperimentConfig& c) {
  c.validate();
  ExperimentReport rep;
  rep.experiment = kind;
  rep.manifest.canonical_config = canonical_text(c);
  rep.manifest.config_digest = short_digest(rep.manifest.canonical_config);
  rep.manifest.units = c.units;
  rep.manifest.threads = c.threads;
  rep.manifest.warnings = c.warnings;
  std::ostringstream os;
  os << "split-step Strang, steps_per_fall=" << c.solver.steps_per_fall << ", n_sigma=" << c.solver.n_sigma
     << ", snapshot_stride=" << c.solver.snapshot_stride << ", fft=fftw3 estimate";
  if (c.solver.dt) os << ", dt=" << format_double(*c.solver.dt);
  rep.manifest.solver_summary = os.str();
  return rep;
}

inline void sort_records(ExperimentReport& rep) {
  std::sort(rep.records.begin(), rep.records.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.digest < b.digest; });
}

inline void note_warnings(ExperimentReport& rep) {
  for (const auto& r : rep.records) {
    if (r.simulated && r.distribution.capture_warning)
      rep.manifest.warnings.push_back("record " + r.label + ": window captured only " +
                                      format_double(r.distribution.flux_captured) + " of the flux");
  }
}

}  // namespace detail

/// Two particles dropped from matched preparations.
inline ExperimentReport run_galileo_pair(ExperimentConfig config) {
  auto rep = detail::start_report(ExperimentKind::drop, config);
  if (config.particles.size() != 2) throw ConfigError("drop requires exactly two particles");
  auto& p1 = config.particles[0];
  auto& p2 = config.particles[1];
  const auto before = check_matched(p1.spec, p1.mass, p2.spec, p2.mass, config.match_tolerance, config.units);
  rep.metrics["initial_position_residual"] = before.position_residual;
  rep.metrics["initial_velocity_residual"] = before.velocity_residual;
  if (!before.matched) {
    if (!config.auto_match)
      throw ConfigError("particles are not prepared with equal mean position and velocity");
    p2.spec = match_second_particle(p1.spec, p1.mass, StateFamily::of(p2.spec), p2.mass, config.units);
    rep.manifest.warnings.push_back("particle " + p2.label + " re-prepared to satisfy the matching conditions");
  }
  const auto after = check_matched(p1.spec, p1.mass, p2.spec, p2.mass, config.match_tolerance, config.units);
  rep.checks["prepared_matched"] = after.matched;

  std::vector<RunRecord> recs(2);
  parallel_for(2, config.threads, [&](std::size_t i) {
    const auto& p = config.particles[i];
    const auto params = LinearPotentialParams::gravity(p.mass, config.units.g);
    recs[i] = detail::make_record(rep.manifest.config_digest, p.label, "drop", p.spec, params, config.units,
                                  config.z_detector);
    detail::simulate_record(recs[i], {{1.0, p.spec}}, params, config);
  });
  const auto& a = recs[0];
  const auto& b = recs[1];
  rep.metrics["t_ehrenfest_ratio"] = b.t_ehrenfest / a.t_ehrenfest;
  rep.metrics["t_ehrenfest_difference"] = b.t_ehrenfest - a.t_ehrenfest;
  rep.metrics["sigma_asymptotic_ratio"] = b.sigma_asymptotic / a.sigma_asymptotic;
  rep.metrics["current_mean_difference"] = b.distribution.mean_t - a.distribution.mean_t;
  rep.metrics["current_std_difference"] = b.distribution.std_t - a.distribution.std_t;
  rep.metrics["combined_solver_tolerance"] = a.solver_tolerance + b.solver_tolerance;
  const bool same_ratio = std::abs(a.mass.inertial_to_gravitational() - b.mass.inertial_to_gravitational()) <=
                          1e-12 * a.mass.inertial_to_gravitational();
  const bool same_tof = std::abs(a.t_ehrenfest - b.t_ehrenfest) <= 1e-9 * a.t_ehrenfest;
  rep.metrics["mean_tof_coincide"] = same_tof ? 1.0 : 0.0;
  rep.checks["tof_coincidence_iff_equal_mass_ratio"] = same_tof == same_ratio;
  try {
    const auto d = distribution_distance(a.distribution, b.distribution);
    rep.distances.push_back({p1.label + "_vs_" + p2.label, d.l1, d.ks, true});
  } catch (const ConfigError&) {
    rep.manifest.warnings.push_back("arrival windows of the two particles are disjoint");
  }
  rep.records = std::move(recs);
  detail::note_warnings(rep);
  detail::sort_records(rep);
  return rep;
}

/// Same state evolved as a gravitational drop and as free motion seen from a frame
/// accelerating with a = config.acceleration. Passes iff every L1 distance <= 1e-10.
inline ExperimentReport run_equivalence_test(ExperimentConfig config) {
  auto rep = detail::start_report(ExperimentKind::ep_test, config);
  const std::size_t n = config.particles.size();
  std::vector<RunRecord> recs(2 * n);
  parallel_for(2 * n, config.threads, [&](std::size_t i) {
    const auto& p = config.particles[i / 2];
    const bool accelerated = i % 2 == 1;
    const auto params = accelerated ? LinearPotentialParams::accelerated_frame(p.mass, config.acceleration)
                                    : LinearPotentialParams::gravity(p.mass, config.units.g);
    recs[i] = detail::make_record(rep.manifest.config_digest, p.label + (accelerated ? "_accelerated" : "_gravity"),
                                  p.label, p.spec, params, config.units, config.z_detector);
    detail::simulate_record(recs[i], {{1.0, p.spec}}, params, config);
  });
  bool all_pass = true;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = config.particles[k];
    DistanceRecord d{p.label, 0.0, 0.0, false};
    try {
      const auto dist = distribution_distance(recs[2 * k].distribution, recs[2 * k + 1].distribution);
      d.l1 = dist.l1;
      d.ks = dist.ks;
    } catch (const ConfigError&) {
      d.l1 = 2.0;  // disjoint supports
      d.ks = 1.0;
    }
    d.pass = d.l1 <= 1e-10;
    all_pass = all_pass && d.pass;
    rep.distances.push_back(d);
    const bool pre = p.mass.inertial == p.mass.gravitational && config.acceleration == config.units.g;
    if (!pre)
      rep.manifest.warnings.push_back("particle " + p.label +
                                      ": m_i != m_g or a != g; equivalence is not expected to hold");
  }
  rep.checks["equivalence_l1_le_1e-10"] = all_pass;
  rep.records = std::move(recs);
  detail::note_warnings(rep);
  detail::sort_records(rep);
  return rep;
}

/// Scaling of sigma_asymptotic with m_g, of the mean ToF with m_i/m_g, and of eps with the state.
inline ExperimentReport run_mass_sweep(ExperimentConfig config) {
  auto rep = detail::start_report(ExperimentKind::sweep, config);
  const auto& sw = config.sweep;
  auto check_axis = [](const std::vector<double>& xs, const char* name) {
    if (xs.size() < 5) throw ConfigError(std::string("sweep axis ") + name + " needs at least 5 values");
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (!(*lo > 0.0) || *hi / *lo < 10.0)
      throw ConfigError(std::string("sweep axis ") + name + " must span at least one decade");
  };
  check_axis(sw.gravitational_masses, "m_gravitational");
  check_axis(sw.mass_ratios, "mass_ratio");

  const auto& base = config.particles.front();
  struct Point {
    std::string label;
    std::string group;
    WavepacketSpec spec;
    MassPair mass;
  };
  std::vector<Point> points;
  for (double mg : sw.gravitational_masses)
    points.push_back({"mg=" + format_double(mg), "m_gravitational", base.spec, {base.mass.inertial, mg}});
  for (double r : sw.mass_ratios)
    points.push_back({"ratio=" + format_double(r), "mass_ratio", base.spec,
                      {r * base.mass.gravitational, base.mass.gravitational}});
  const double delta = base.spec.kind == StateKind::cat ? base.spec.delta : base.spec.delta0;
  for (const auto& kind : sw.state_kinds)
    points.push_back({kind, "state", preset_state(kind, base.spec.z0, delta, base.spec.delta0), base.mass});
  std::vector<double> thetas = sw.thetas;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
  for (std::size_t i = 0; i < sw.random_thetas; ++i) thetas.push_back(phase(rng));
  for (double th : thetas)
    points.push_back({"theta=" + format_double(th), "theta",
                      WavepacketSpec::cat(base.spec.z0, delta, base.spec.delta0, {1.0, 0.0}, std::polar(1.0, th)),
                      base.mass});

  std::vector<RunRecord> recs(points.size());
  parallel_for(points.size(), config.threads, [&](std::size_t i) {
    const auto& pt = points[i];
    const auto params = LinearPotentialParams::gravity(pt.mass, config.units.g);
    recs[i] = detail::make_record(rep.manifest.config_digest, pt.label, pt.group, pt.spec, params, config.units,
                                  config.z_detector);
    if (sw.simulate) detail::simulate_record(recs[i], {{1.0, pt.spec}}, params, config);
  });

  std::vector<double> mg;
  std::vector<double> sig;
  std::vector<double> ratio;
  std::vector<double> tof;
  for (const auto& r : recs) {
    if (r.group == "m_gravitational") {
      mg.push_back(r.mass.gravitational);
      sig.push_back(r.sigma_asymptotic);
    } else if (r.group == "mass_ratio") {
      ratio.push_back(r.mass.inertial_to_gravitational());
      tof.push_back(r.t_ehrenfest);
    } else if (r.group == "state") {
      rep.metrics["epsilon_" + r.label] = r.epsilon;
    }
  }
  rep.fits.push_back(fit_power_law("sigma_asymptotic_vs_m_gravitational", mg, sig));
  rep.fits.push_back(fit_power_law("t_ehrenfest_vs_mass_ratio", ratio, tof));
  rep.checks["sigma_exponent_minus_one"] = std::abs(rep.fits[0].exponent + 1.0) <= 0.01;
  rep.checks["tof_exponent_one_half"] = std::abs(rep.fits[1].exponent - 0.5) <= 0.01;
  if (sw.simulate) {
    std::vector<double> msig;
    for (const auto& r : recs)
      if (r.group == "m_gravitational") msig.push_back(r.distribution.std_t);
    rep.fits.push_back(fit_power_law("current_std_vs_m_gravitational", mg, msig));
  }
  rep.records = std::move(recs);
  detail::note_warnings(rep);
  detail::sort_records(rep);
  return rep;
}

/// Pure cat vs the diagonal mixture of its two branches (two pure-branch runs
/// combined with weights |c+-|^2).
inline ExperimentReport run_decoherence_comparison(ExperimentConfig config) {
  auto rep = detail::start_report(ExperimentKind::decohere, config);
  const auto& p = config.particles.front();
  if (p.spec.kind != StateKind::cat) throw SpecError("decoherence comparison needs a cat state");
  const auto params = LinearPotentialParams::gravity(p.mass, config.units.g);
  const auto branches = mixture_branches(p.spec);
  const auto pure_m = analytic_moments(p.spec, config.units);
  const auto mix_m = mixture_moments(p.spec, config.units);

  std::vector<RunRecord> recs(2);
  parallel_for(2, config.threads, [&](std::size_t i) {
    if (i == 0) {
      recs[0] = detail::make_record(rep.manifest.config_digest, p.label + "_pure", "pure", p.spec, params,
                                    config.units, config.z_detector);
      detail::simulate_record(recs[0], {{1.0, p.spec}}, params, config);
    } else {
      // Mixture statistics from its own moments; the mixture has no single wavefunction.
      RunRecord r = detail::make_record(rep.manifest.config_digest, p.label + "_mixture", "mixture", p.spec,
                                        params, config.units, config.z_detector);
      r.initial_mean_p = mix_m.mean_p;
      r.t_ehrenfest = ehrenfest_tof(mix_m, params, config.z_detector);
      const auto mt = moment_evolution(mix_m, params, r.t_ehrenfest);
      r.sigma_full = mt.sigma_z() / std::abs(mt.mean_p / params.mass.inertial);
      r.epsilon = 1.0;
      r.sigma_asymptotic = std::numbers::sqrt2 / 2.0 * config.units.hbar / (p.spec.delta0 * params.force());
      detail::simulate_record(r, branches, params, config);
      recs[1] = std::move(r);
    }
  });
  const auto& pure = recs[0];
  const auto& mix = recs[1];
  rep.metrics["pure_initial_mean_p"] = pure_m.mean_p;
  rep.metrics["mixture_initial_mean_p"] = mix_m.mean_p;
  rep.metrics["pure_var_p"] = pure_m.var_p;
  rep.metrics["mixture_var_p"] = mix_m.var_p;
  rep.metrics["momentum_interference_gap"] = interference_gap(p.spec, Observable::momentum, config.units);
  rep.metrics["position_interference_gap"] = interference_gap(p.spec, Observable::position, config.units);
  rep.metrics["pure_mean_t"] = pure.distribution.mean_t;
  rep.metrics["mixture_mean_t"] = mix.distribution.mean_t;
  rep.metrics["pure_std_t"] = pure.distribution.std_t;
  rep.metrics["mixture_std_t"] = mix.distribution.std_t;
  const double combined = pure.solver_tolerance + mix.solver_tolerance;
  rep.metrics["combined_solver_tolerance"] = combined;
  rep.metrics["mean_t_difference"] = pure.distribution.mean_t - mix.distribution.mean_t;
  rep.checks["mixture_mean_p_zero"] = std::abs(mix_m.mean_p) <= 1e-12;
  const auto d = distribution_distance(pure.distribution, mix.distribution);
  rep.distances.push_back({"pure_vs_mixture", d.l1, d.ks, true});
  rep.records = std::move(recs);
  detail::note_warnings(rep);
  detail::sort_records(rep);
  return rep;
}

inline ExperimentReport run_experiment(ExperimentKind kind, const ExperimentConfig& config) {
  switch (kind) {
    case ExperimentKind::drop: return run_galileo_pair(config);
    case ExperimentKind::ep_test: return run_equivalence_test(config);
    case ExperimentKind::sweep: return run_mass_sweep(config);
    case ExperimentKind::decohere: return run_decoherence_comparison(config);
  }
  throw ConfigError("unknown experiment");
}

/// Defaults used when a subcommand runs without a config file.
inline ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  const double z0 = 20.0;
  switch (kind) {
    case ExperimentKind::drop:
      c.particles = {{"1", WavepacketSpec::gaussian(z0, 1.0), {1.0, 1.0}},
                     {"2", WavepacketSpec::gaussian(z0, 1.0), {2.0, 2.0}}};
      break;
    case ExperimentKind::ep_test:
      for (const char* k : {"gaussian", "male", "female", "yurke_stoler"})
        c.particles.push_back({k, preset_state(k, z0, 1.0, 1.0), {1.0, 1.0}});
      break;
    case ExperimentKind::sweep:
      c.particles = {{"1", WavepacketSpec::gaussian(z0, 1.0), {1.0, 1.0}}};
      break;
    case ExperimentKind::decohere:
      c.particles = {{"yurke_stoler", WavepacketSpec::yurke_stoler(z0, 1.0, 1.0), {1.0, 1.0}}};
      break;
  }
  return c;
}

}  // namespace qfall
