#pragma once

// Galilean preparation: two particles must share the mean initial position and the
// mean initial velocity <p>/m_i.

#include <cmath>
#include <complex>
#include <numbers>

#include "qfall/states.hpp"

namespace qfall {

struct PreparationTarget {
  double mean_z_target = 0.0;
  double velocity_target = 0.0;
};

inline PreparationTarget preparation_of(const WavepacketSpec& spec, const MassPair& mass,
                                        const UnitSystem& units) {
  const auto m = analytic_moments(spec, units);
  return {m.mean_z, m.mean_p / mass.inertial};
}

struct MatchReport {
  bool matched = false;
  double position_residual = 0.0;  // <z>_1 - <z>_2
  double velocity_residual = 0.0;  // <p>_1/m_i1 - <p>_2/m_i2
};

/// Matched iff |dz| <= tol * length_ref and |dv| <= tol * hbar/(mass_ref * length_ref).
inline MatchReport check_matched(const WavepacketSpec& spec1, const MassPair& mass1,
                                 const WavepacketSpec& spec2, const MassPair& mass2, double tol,
                                 const UnitSystem& units = {}) {
  const auto t1 = preparation_of(spec1, mass1, units);
  const auto t2 = preparation_of(spec2, mass2, units);
  MatchReport r;
  r.position_residual = t1.mean_z_target - t2.mean_z_target;
  r.velocity_residual = t1.velocity_target - t2.velocity_target;
  r.matched = std::abs(r.position_residual) <= tol * units.length_ref &&
              std::abs(r.velocity_residual) <= tol * units.velocity_scale();
  return r;
}

/// The state family of the second particle: geometry and moduli are fixed, z0 and
/// the relative phase are solved for.
struct StateFamily {
  StateKind kind = StateKind::gaussian;
  double delta = 0.0;
  double delta0 = 1.0;
  double modulus_plus = 1.0;
  double modulus_minus = 0.0;

  static StateFamily of(const WavepacketSpec& spec) {
    return {spec.kind, spec.effective_delta(), spec.delta0, std::abs(spec.c_plus),
            std::abs(spec.effective_minus())};
  }

  WavepacketSpec at(double z0, double theta) const {
    if (kind == StateKind::gaussian) return WavepacketSpec::gaussian(z0, delta0, modulus_plus);
    return WavepacketSpec::cat(z0, delta, delta0, {modulus_plus, 0.0},
                               std::polar(modulus_minus, theta));
  }

  /// Phase at which |<p>| peaks: cos(theta*) = -2 a b E / (a^2 + b^2). <p> is monotone
  /// increasing in theta on [-theta*, theta*].
  double extremal_theta() const {
    if (kind == StateKind::gaussian) return 0.0;
    const double a = modulus_plus;
    const double b = modulus_minus;
    const double e = std::exp(-(delta / delta0) * (delta / delta0));
    return std::acos(-2.0 * a * b * e / (a * a + b * b));
  }
};

/// Largest reachable |<p>|/m_i within the family.
inline double max_velocity(const StateFamily& family, const MassPair& mass, const UnitSystem& units) {
  if (family.kind == StateKind::gaussian || family.modulus_plus == 0.0 || family.modulus_minus == 0.0)
    return 0.0;
  const auto m = analytic_moments(family.at(0.0, family.extremal_theta()), units);
  return std::abs(m.mean_p) / mass.inertial;
}

/// Solves (z0, theta) of the family so the second particle satisfies the Galilean
/// prescription relative to the first one.
inline WavepacketSpec match_second_particle(const WavepacketSpec& spec1, const MassPair& mass1,
                                            const StateFamily& family2, const MassPair& mass2,
                                            const UnitSystem& units = {}) {
  spec1.validate();
  mass1.validate();
  mass2.validate();
  family2.at(0.0, 0.0).validate();

  const auto target = preparation_of(spec1, mass1, units);
  const double v_max = max_velocity(family2, mass2, units);
  const double v_abs = std::abs(target.velocity_target);
  const double v_floor = 1e-12 * units.velocity_scale();
  if (v_abs > v_max * (1.0 + 1e-12) && v_abs > v_floor)
    throw InfeasibleMatchError(target.velocity_target, v_max);

  double theta = 0.0;
  if (v_abs > v_floor) {
    const double p_target = v_abs * mass2.inertial;
    auto momentum = [&](double th) { return analytic_moments(family2.at(0.0, th), units).mean_p; };
    double lo = 0.0;
    double hi = family2.extremal_theta();
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (momentum(mid) < p_target) lo = mid;
      else hi = mid;
    }
    theta = std::abs(momentum(lo) - p_target) <= std::abs(momentum(hi) - p_target) ? lo : hi;
    if (target.velocity_target < 0.0) theta = -theta;
  }

  // <p> does not depend on z0, so the joint solve settles after the first pass.
  double z0 = target.mean_z_target;
  WavepacketSpec out = family2.at(z0, theta);
  for (int it = 0; it < 50; ++it) {
    const auto m = analytic_moments(out, units);
    const double dz = target.mean_z_target - m.mean_z;
    const double dv = target.velocity_target - m.mean_p / mass2.inertial;
    const bool z_ok = std::abs(dz) <= 1e-14 * std::max(units.length_ref, std::abs(target.mean_z_target));
    const bool v_ok = std::abs(dv) <= 1e-10 * std::max(units.velocity_scale(), v_abs);
    if (z_ok && v_ok) break;
    z0 += dz;
    out = family2.at(z0, theta);
  }
  return out;
}

}  // namespace qfall
