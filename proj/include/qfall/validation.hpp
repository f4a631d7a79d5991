#pragma once

// Analytic-vs-numeric self checks run by `qfall validate`.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "qfall/experiments.hpp"

namespace qfall {

struct ValidationCheck {
  std::string name;
  double value = 0.0;      // measured error or statistic
  double tolerance = 0.0;  // pass bound (meaning depends on the check)
  bool pass = false;
  std::string detail;
};

namespace detail {

inline ValidationCheck bound_check(std::string name, double err, double tol, std::string detail = {}) {
  return {std::move(name), err, tol, std::isfinite(err) && err <= tol, std::move(detail)};
}

}  // namespace detail

inline std::vector<ValidationCheck> run_validation() {
  using detail::bound_check;
  std::vector<ValidationCheck> out;
  const UnitSystem units;
  const double eps_male = std::sqrt((std::numbers::e - 1.0) / (std::numbers::e + 1.0));
  auto guarded = [&](const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      out.push_back({name, 0.0, 0.0, false, std::string("threw: ") + e.what()});
    }
  };

  guarded("epsilon_closed_forms", [&] {
    const double e1 = std::abs(epsilon_factor(WavepacketSpec::gaussian(0.0, 1.0), units) - 1.0);
    const double e2 = std::abs(epsilon_factor(WavepacketSpec::male(0.0, 1.0, 1.0), units) - eps_male);
    const double e3 = std::abs(epsilon_factor(WavepacketSpec::female(0.0, 1.0, 1.0), units) - 1.0 / eps_male);
    out.push_back(bound_check("epsilon_closed_forms", std::max({e1, e2, e3}), 1e-12));
  });

  guarded("moments_analytic_vs_quadrature", [&] {
    const auto grid = make_grid(-40.0, 40.0, 4096);
    double worst = 0.0;
    for (const auto& spec :
         {WavepacketSpec::gaussian(1.5, 1.3), WavepacketSpec::male(0.0, 1.0, 1.0), WavepacketSpec::female(2.0, 1.7, 0.8),
          WavepacketSpec::yurke_stoler(-1.0, 1.0, 1.0),
          WavepacketSpec::cat(0.5, 0.4, 1.1, {0.3, -0.8}, std::polar(1.7, 2.1))}) {
      const auto a = analytic_moments(spec, units);
      const auto n = numeric_moments(build_wavefunction(spec, grid), units);
      worst = std::max({worst, std::abs(a.mean_z - n.mean_z), std::abs(a.mean_p - n.mean_p),
                        std::abs(a.var_z - n.var_z), std::abs(a.var_p - n.var_p), std::abs(a.cov_zp - n.cov_zp)});
    }
    out.push_back(bound_check("moments_analytic_vs_quadrature", worst, 1e-8));
  });

  guarded("uncertainty_principle", [&] {
    double worst = 0.0;
    for (double th = -3.0; th <= 3.0; th += 0.5) {
      const auto m = analytic_moments(WavepacketSpec::cat(0.0, 1.2, 0.9, {1.0, 0.0}, std::polar(0.7, th)), units);
      worst = std::max(worst, 0.25 - m.sigma_z() * m.sigma_z() * m.sigma_p() * m.sigma_p());
    }
    out.push_back(bound_check("uncertainty_principle", worst, 1e-12, "max(hbar^2/4 - var_z var_p)"));
  });

  guarded("ehrenfest_tof_closed_form", [&] {
    double worst = 0.0;
    for (double r : {1.0, 2.0, 4.0}) {
      const auto params = LinearPotentialParams::gravity({r, 1.0}, 1.0);
      const double t = ehrenfest_tof(WavepacketSpec::gaussian(2.0, 0.1), params, units, 0.0);
      worst = std::max(worst, std::abs(t - 2.0 * std::sqrt(r)));
    }
    out.push_back(bound_check("ehrenfest_tof_closed_form", worst, 1e-12));
  });

  guarded("momentum_phase_structure", [&] {
    const auto at = [&](double th) {
      return analytic_moments(WavepacketSpec::cat(0.0, 3.0, 1.0, {1.0, 0.0}, std::polar(1.0, th)), units).mean_p;
    };
    double worst = std::max(std::abs(at(0.0)), std::abs(at(std::numbers::pi)));
    out.push_back(bound_check("momentum_zero_at_real_phases", worst, 1e-12));
    std::size_t arg_hi = 0;
    std::size_t arg_lo = 0;
    for (std::size_t i = 0; i < 360; ++i) {
      const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / 360.0;
      if (at(th) > at(2.0 * std::numbers::pi * static_cast<double>(arg_hi) / 360.0)) arg_hi = i;
      if (at(th) < at(2.0 * std::numbers::pi * static_cast<double>(arg_lo) / 360.0)) arg_lo = i;
    }
    const bool ok = (arg_hi == 90 && arg_lo == 270) || (arg_hi == 270 && arg_lo == 90);
    out.push_back({"momentum_argmax_quarter_phases", static_cast<double>(arg_hi), 0.0, ok,
                   "argmax index " + std::to_string(arg_hi) + ", argmin index " + std::to_string(arg_lo)});
  });

  guarded("split_step_solver", [&] {
    const auto grid = make_grid(-60.0, 40.0, 1024);
    const auto spec = WavepacketSpec::yurke_stoler(10.0, 1.0, 1.0);
    const auto psi0 = build_wavefunction(spec, grid);
    const auto params = LinearPotentialParams::gravity({1.0, 1.0}, 1.0);
    SolverSettings s;
    s.dt = 4.0 / 10000.0;
    s.n_steps = 10000;
    s.snapshot_stride = 1000;
    const auto res = split_step_evolve(psi0, params, units, s);
    out.push_back(bound_check("norm_drift_1e4_steps", res.max_norm_drift(), 1e-10));
    const auto oc = strang_order_check(psi0, params, units, 2.0, 1024);
    out.push_back({"strang_order_ratio", oc.ratio, 4.0, oc.ratio >= 3.5 && oc.ratio <= 4.5, "expected 4"});
    out.push_back(bound_check("split_vs_exact_l2_refined", oc.refined_error, 1e-8));
  });

  guarded("equivalence_gaussian", [&] {
    auto c = default_config(ExperimentKind::ep_test);
    c.particles.resize(1);
    const auto rep = run_equivalence_test(c);
    out.push_back(bound_check("equivalence_gaussian_l1", rep.distances.at(0).l1, 1e-10));
  });

  guarded("mixture_momentum", [&] {
    const auto spec = WavepacketSpec::yurke_stoler(10.0, 1.0, 1.0);
    const auto mix = mixture_moments(spec, units);
    const auto pure = analytic_moments(spec, units);
    out.push_back(bound_check("mixture_mean_p_zero", std::abs(mix.mean_p), 1e-12,
                              "pure <p> = " + format_double(pure.mean_p)));
  });

  guarded("preparation_matching", [&] {
    const auto s1 = WavepacketSpec::yurke_stoler(20.0, 1.0, 1.0);
    const MassPair m1{1.0, 1.0};
    const MassPair m2{0.5, 0.5};
    const auto fam = StateFamily::of(WavepacketSpec::yurke_stoler(0.0, 1.0, 1.0));
    const auto s2 = match_second_particle(s1, m1, fam, m2, units);
    const auto mr = check_matched(s1, m1, s2, m2, 1e-9, units);
    out.push_back(bound_check("preparation_matching",
                              std::max(std::abs(mr.position_residual), std::abs(mr.velocity_residual)), 1e-9));
  });

  guarded("sweep_exponents", [&] {
    const auto rep = run_mass_sweep(default_config(ExperimentKind::sweep));
    out.push_back(bound_check("sigma_vs_mg_exponent", std::abs(rep.fits.at(0).exponent + 1.0), 0.01));
    out.push_back(bound_check("tof_vs_ratio_exponent", std::abs(rep.fits.at(1).exponent - 0.5), 0.01));
  });
  return out;
}

}  // namespace qfall
