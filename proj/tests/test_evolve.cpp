#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "qfall/evolve.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace qfall;

namespace {

const UnitSystem kUnits{};

// Closed-form Gaussian in a uniform field (free spreading, shifted and phase-dressed).
complex gaussian_in_field(double z, double t, double z0, double d0, double m, double g, double hbar) {
  const complex a(1.0, hbar * t / (m * d0 * d0));
  const double x = z + 0.5 * g * t * t;
  const complex chi = std::pow(std::numbers::pi * d0 * d0, -0.25) / std::sqrt(a) *
                      std::exp(-(x - z0) * (x - z0) / (2.0 * d0 * d0 * a));
  return chi * std::polar(1.0, -m * g * t * z / hbar - m * g * g * t * t * t / (6.0 * hbar));
}

}  // namespace

TEST_CASE("moment evolution closed forms", "[evolve]") {
  const auto m0 = analytic_moments(WavepacketSpec::gaussian(10.0, 1.0), kUnits);
  const auto p = LinearPotentialParams::gravity({2.0, 3.0}, 1.5);
  const double t = 1.7;
  const auto m = moment_evolution(m0, p, t);
  CHECK_THAT(m.mean_z, WithinRel(10.0 - 0.5 * (3.0 * 1.5 / 2.0) * t * t, 1e-15));
  CHECK_THAT(m.mean_p, WithinRel(-3.0 * 1.5 * t, 1e-15));
  // free spreading: Delta0^2/2 (1 + (hbar t / (m Delta0^2))^2)
  CHECK_THAT(m.var_z, WithinRel(0.5 * (1.0 + (t / 2.0) * (t / 2.0)), 1e-15));
  CHECK(m.var_p == m0.var_p);
  CHECK_THROWS_AS(moment_evolution(m0, p, -1.0), PreconditionError);
}

TEST_CASE("gravity and accelerated frame couple through different masses", "[evolve]") {
  const MassPair m{2.0, 5.0};
  const auto g = LinearPotentialParams::gravity(m, 1.0);
  const auto a = LinearPotentialParams::accelerated_frame(m, 1.0);
  CHECK(g.force() == 5.0);
  CHECK(g.effective_acceleration() == 2.5);
  CHECK(a.force() == 2.0);
  CHECK(a.effective_acceleration() == 1.0);
  CHECK_THROWS_AS(LinearPotentialParams::gravity(m, -1.0).validate(), ConfigError);
}

TEST_CASE("exact propagator matches the closed-form Gaussian", "[evolve]") {
  const auto grid = make_grid(-70.0, 90.0, 4096);
  const auto spec = WavepacketSpec::gaussian(15.0, 1.2);
  for (double m : {0.5, 1.0, 3.0}) {
    const auto params = LinearPotentialParams::gravity({m, m}, 1.0);
    const double t = 4.0;
    const auto psi = exact_wavefunction(spec, params, t, grid, kUnits);
    double worst = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j)
      worst = std::max(worst, std::abs(psi[j] - gaussian_in_field(grid.position(j), t, 15.0, 1.2, m, 1.0, 1.0)));
    INFO("m = " << m);
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("exact propagator preserves norm and follows Ehrenfest", "[evolve]") {
  const auto grid = make_grid(-80.0, 100.0, 4096);
  const auto spec = WavepacketSpec::yurke_stoler(20.0, 1.5, 0.9);
  const auto params = LinearPotentialParams::gravity({1.3, 0.7}, 1.0);
  const double t = 5.0;
  const auto psi = exact_wavefunction(spec, params, t, grid, kUnits);
  CHECK_THAT(norm_squared(psi), WithinAbs(1.0, 1e-12));
  const auto num = numeric_moments(psi, kUnits);
  const auto ana = moment_evolution(analytic_moments(spec, kUnits), params, t);
  CHECK_THAT(num.mean_z, WithinAbs(ana.mean_z, 1e-9));
  CHECK_THAT(num.mean_p, WithinAbs(ana.mean_p, 1e-9));
  CHECK_THAT(num.var_z, WithinAbs(ana.var_z, 1e-9));
  CHECK_THAT(num.var_p, WithinAbs(ana.var_p, 1e-9));
  CHECK_THAT(num.cov_zp, WithinAbs(ana.cov_zp, 1e-9));
}

TEST_CASE("exact propagator refuses packets that leave the grid", "[evolve]") {
  const auto grid = make_grid(-10.0, 30.0, 1024);
  const auto params = LinearPotentialParams::gravity({1.0, 1.0}, 1.0);
  CHECK_THROWS_AS(exact_wavefunction(WavepacketSpec::gaussian(20.0, 1.0), params, 8.0, grid, kUnits), DomainError);
  CHECK_THROWS_AS(exact_wavefunction(WavepacketSpec::gaussian(20.0, 1.0), params, -1.0, grid, kUnits),
                  PreconditionError);
}

TEST_CASE("split-step conserves norm over 1e4 steps", "[evolve]") {
  const auto grid = make_grid(-60.0, 40.0, 1024);
  const auto psi0 = build_wavefunction(WavepacketSpec::female(15.0, 1.0, 1.0), grid);
  SolverSettings s;
  s.dt = 5e-4;
  s.n_steps = 10000;
  s.snapshot_stride = 500;
  const auto res = split_step_evolve(psi0, LinearPotentialParams::gravity({1.0, 1.0}, 1.0), kUnits, s);
  CHECK(res.max_norm_drift() <= 1e-10);
  CHECK(res.times.size() == 21);
  CHECK(res.times.back() == 5.0);
}

TEST_CASE("split-step is time reversible", "[evolve]") {
  const auto grid = make_grid(-30.0, 30.0, 512);
  const auto psi0 = build_wavefunction(WavepacketSpec::yurke_stoler(5.0, 1.0, 1.0), grid);
  const auto params = LinearPotentialParams::gravity({1.0, 2.0}, 1.0);
  SplitStepPropagator fwd(grid, params, kUnits, 0.01);
  SplitStepPropagator back(grid, params, kUnits, -0.01);
  auto psi = psi0.amplitudes;
  for (int i = 0; i < 300; ++i) fwd.step(psi);
  CHECK(l2_distance(GridField(grid, psi), psi0) > 0.1);
  for (int i = 0; i < 300; ++i) back.step(psi);
  CHECK(l2_distance(GridField(grid, psi), psi0) < 1e-10);
}

TEST_CASE("split-step tracks Ehrenfest moments", "[evolve]") {
  const auto spec = WavepacketSpec::yurke_stoler(10.0, 1.0, 1.0);
  const auto params = LinearPotentialParams::gravity({1.0, 1.0}, 1.0);
  const double t_final = 4.0;
  const auto grid = plan_grid(std::span(&spec, 1), params, kUnits, t_final);
  SolverSettings s;
  s.dt = t_final / 4096;
  s.n_steps = 4096;
  s.snapshot_stride = 256;
  const auto res = split_step_evolve(build_wavefunction(spec, grid), params, kUnits, s);
  const auto m0 = analytic_moments(spec, kUnits);
  for (std::size_t i = 0; i < res.times.size(); ++i) {
    const auto e = moment_evolution(m0, params, res.times[i]);
    CHECK_THAT(res.moments[i].mean_z, WithinAbs(e.mean_z, 1e-9));
    CHECK_THAT(res.moments[i].mean_p, WithinAbs(e.mean_p, 1e-9));
    CHECK_THAT(res.moments[i].var_z, WithinAbs(e.var_z, 1e-8));
  }
}

TEST_CASE("Strang splitting is second order and converges to the exact propagator", "[evolve]") {
  const auto grid = make_grid(-40.0, 30.0, 1024);
  const auto psi0 = build_wavefunction(WavepacketSpec::male(10.0, 1.0, 1.0), grid);
  const auto params = LinearPotentialParams::gravity({1.0, 1.0}, 1.0);
  const auto oc = strang_order_check(psi0, params, kUnits, 2.0, 1024);
  REQUIRE(oc.errors.size() == 4);
  for (std::size_t i = 0; i + 1 < oc.errors.size(); ++i) {
    const double r = oc.errors[i] / oc.errors[i + 1];
    CHECK(r > 3.9);
    CHECK(r < 4.1);
  }
  // the splitting error is the global phase F^2 dt^2 t / (24 hbar m_i)
  const double dt = oc.dts.front();
  const double phase = dt * dt * 2.0 / 24.0;
  CHECK_THAT(oc.errors.front(), WithinRel(2.0 * std::sin(phase / 2.0), 1e-3));
  CHECK(oc.refined_error <= 1e-8);
}

TEST_CASE("gravity and accelerated frame give identical fields when m_i = m_g and a = g", "[evolve]") {
  const auto grid = make_grid(-40.0, 30.0, 1024);
  const auto psi0 = build_wavefunction(WavepacketSpec::yurke_stoler(10.0, 1.0, 1.0), grid);
  SolverSettings s;
  s.dt = 1e-3;
  s.n_steps = 2000;
  s.snapshot_stride = 2000;
  s.store_fields = true;
  const auto a = split_step_evolve(psi0, LinearPotentialParams::gravity({1.0, 1.0}, 1.0), kUnits, s);
  const auto b = split_step_evolve(psi0, LinearPotentialParams::accelerated_frame({1.0, 1.0}, 1.0), kUnits, s);
  CHECK(a.fields.back().amplitudes == b.fields.back().amplitudes);
  const auto c = split_step_evolve(psi0, LinearPotentialParams::accelerated_frame({1.0, 1.0}, 2.0), kUnits, s);
  CHECK(l2_distance(a.fields.back(), c.fields.back()) > 0.1);
}

TEST_CASE("solver guards", "[evolve]") {
  const auto params = LinearPotentialParams::gravity({1.0, 1.0}, 1.0);
  SolverSettings s;
  s.dt = 0.01;
  s.n_steps = 2000;
  s.snapshot_stride = 100;

  SECTION("Nyquist") {
    const auto coarse = make_grid(-200.0, 40.0, 256);
    const auto psi0 = build_wavefunction(WavepacketSpec::gaussian(10.0, 2.0), coarse);
    CHECK_THROWS_AS(split_step_evolve(psi0, params, kUnits, s), ConfigError);
  }
  SECTION("boundary") {
    const auto grid = make_grid(-20.0, 20.0, 1024);
    const auto psi0 = build_wavefunction(WavepacketSpec::gaussian(10.0, 1.0), grid);
    s.n_steps = 1000;
    try {
      split_step_evolve(psi0, params, kUnits, s);
      FAIL("expected SolverError");
    } catch (const SolverError& e) {
      CHECK(e.step() > 100);
      CHECK(e.step() < 1000);
    }
  }
  SECTION("preconditions") {
    const auto grid = make_grid(-20.0, 20.0, 256);
    const auto psi0 = build_wavefunction(WavepacketSpec::gaussian(0.0, 1.0), grid);
    s.dt = 0.0;
    CHECK_THROWS_AS(split_step_evolve(psi0, params, kUnits, s), PreconditionError);
  }
}

TEST_CASE("detector probe and probability below", "[evolve]") {
  const auto spec = WavepacketSpec::gaussian(8.0, 1.0);
  const auto params = LinearPotentialParams::gravity({1.0, 1.0}, 1.0);
  const auto grid = plan_grid(std::span(&spec, 1), params, kUnits, 6.0, 0.0);
  SolverSettings s;
  s.dt = 6.0 / 3000;
  s.n_steps = 3000;
  s.snapshot_stride = 3000;
  s.probe_z = 0.0;
  s.probe_from = 2.0;
  s.probe_to = 5.0;
  const auto res = split_step_evolve(build_wavefunction(spec, grid), params, kUnits, s);
  REQUIRE(res.probe);
  CHECK(res.probe->times.front() >= 2.0 - 1e-12);
  CHECK(res.probe->times.back() <= 5.0 + 1e-12);
  CHECK(res.probe->times.size() == 1501);
  for (std::size_t i = 0; i < res.probe->times.size(); i += 100) {
    const double t = res.probe->times[i];
    CHECK(std::abs(res.probe->value[i] - gaussian_in_field(0.0, t, 8.0, 1.0, 1.0, 1.0, 1.0)) < 5e-6);
  }
  // monotone drain through the plane for a falling Gaussian
  CHECK(res.probe->probability_below.back() > res.probe->probability_below.front());
}

TEST_CASE("grid planning", "[evolve]") {
  const WavepacketSpec specs[] = {WavepacketSpec::gaussian(20.0, 1.0), WavepacketSpec::yurke_stoler(20.0, 1.0, 1.0)};
  const auto params = LinearPotentialParams::gravity({1.0, 1.0}, 1.0);
  const auto g = plan_grid(specs, params, kUnits, 8.0, 0.0);
  CHECK((g.size() & (g.size() - 1)) == 0);
  CHECK(g.z_min() < 20.0 - 32.0 - 10.0);
  CHECK(g.z_max() > 28.0);
  CHECK(kUnits.hbar * g.max_wavenumber() >= 2.0 * 8.0);
  CHECK_THROWS_AS(plan_grid(specs, params, kUnits, 8.0, 0.0, 256), ConfigError);
}
