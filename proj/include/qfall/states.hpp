#pragma once

// Gaussian and two-peak ("cat") wavepackets:
//
//   psi(z) = N { c+ exp(-(z - z0 + D)^2 / 2 D0^2) + c- exp(-(z - z0 - D)^2 / 2 D0^2) }
//
// The c+ peak sits at z0 - D and the c- peak at z0 + D. Moments are evaluated in
// closed form from Gaussian integrals and, independently, by grid quadrature.

#include <charconv>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "qfall/core.hpp"
#include "qfall/fft.hpp"

namespace qfall {

enum class StateKind { gaussian, cat };

inline const char* to_string(StateKind k) { return k == StateKind::gaussian ? "gaussian" : "cat"; }

inline StateKind parse_state_kind(const std::string& s) {
  if (s == "gaussian") return StateKind::gaussian;
  if (s == "cat") return StateKind::cat;
  throw SpecError("unknown state kind '" + s + "' (expected gaussian or cat)");
}

struct WavepacketSpec {
  StateKind kind = StateKind::gaussian;
  double z0 = 0.0;
  double delta = 0.0;
  double delta0 = 1.0;
  complex c_plus{1.0, 0.0};
  complex c_minus{0.0, 0.0};

  /// Relative phase phase(c-) - phase(c+), wrapped to (-pi, pi].
  double theta() const { return std::arg(c_minus * std::conj(c_plus)); }

  /// Coefficients actually entering the wavefunction (c- is ignored for a Gaussian).
  complex effective_minus() const { return kind == StateKind::gaussian ? complex{} : c_minus; }
  double effective_delta() const { return kind == StateKind::gaussian ? 0.0 : delta; }

  /// e^{-D^2/D0^2}: overlap of the two peaks.
  double overlap() const {
    const double r = effective_delta() / delta0;
    return std::exp(-r * r);
  }

  /// |c+|^2 + |c-|^2 + 2 Re(c+* c-) e^{-D^2/D0^2}.
  double weight_sum() const {
    const complex cm = effective_minus();
    return std::norm(c_plus) + std::norm(cm) + 2.0 * std::real(std::conj(c_plus) * cm) * overlap();
  }

  void validate() const {
    if (!std::isfinite(z0)) throw SpecError("z0 must be finite");
    if (!(delta0 > 0.0) || !std::isfinite(delta0)) throw SpecError("Delta0 must be positive");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw SpecError("Delta must be non-negative");
    if (kind == StateKind::gaussian) {
      if (delta > 1e-12 * delta0) throw SpecError("Gaussian kind requires Delta = 0");
      if (std::abs(c_plus) == 0.0) throw SpecError("Gaussian kind requires c_plus != 0");
    } else {
      if (!(delta > 1e-12 * delta0)) throw SpecError("cat kind requires Delta > 0");
      if (std::abs(c_plus) == 0.0 && std::abs(c_minus) == 0.0)
        throw SpecError("superposition coefficients are both zero");
    }
    const double moduli = std::norm(c_plus) + std::norm(effective_minus());
    if (!(weight_sum() > 1e-10 * moduli))
      throw SpecError("degenerate state: destructive superposition has vanishing norm");
  }

  static WavepacketSpec gaussian(double z0, double delta0, complex c = {1.0, 0.0}) {
    return {StateKind::gaussian, z0, 0.0, delta0, c, {0.0, 0.0}};
  }
  static WavepacketSpec cat(double z0, double delta, double delta0, complex c_plus, complex c_minus) {
    return {StateKind::cat, z0, delta, delta0, c_plus, c_minus};
  }
  /// Even parity: c+ = c- = 1.
  static WavepacketSpec male(double z0, double delta, double delta0) {
    return cat(z0, delta, delta0, {1.0, 0.0}, {1.0, 0.0});
  }
  /// Odd parity: c+ = -c- = 1.
  static WavepacketSpec female(double z0, double delta, double delta0) {
    return cat(z0, delta, delta0, {1.0, 0.0}, {-1.0, 0.0});
  }
  /// theta = pi/2, equal moduli.
  static WavepacketSpec yurke_stoler(double z0, double delta, double delta0) {
    const double a = 1.0 / std::numbers::sqrt2;
    return cat(z0, delta, delta0, {a, 0.0}, {0.0, a});
  }
};

struct MomentSet {
  double mean_z = 0.0;
  double mean_p = 0.0;
  double var_z = 0.0;
  double var_p = 0.0;
  double cov_zp = 0.0;

  double sigma_z() const { return std::sqrt(var_z); }
  double sigma_p() const { return std::sqrt(var_p); }
  /// var_z var_p - cov^2, bounded below by hbar^2/4.
  double uncertainty_product() const { return var_z * var_p - cov_zp * cov_zp; }
};

/// |N|^2 = [sqrt(pi) D0 (|c+|^2 + |c-|^2 + 2 Re(c+* c-) e^{-D^2/D0^2})]^{-1}.
inline double normalization_constant(const WavepacketSpec& spec) {
  spec.validate();
  return 1.0 / (std::sqrt(std::numbers::pi) * spec.delta0 * spec.weight_sum());
}

/// Closed-form moments of the pure state.
inline MomentSet analytic_moments(const WavepacketSpec& spec, const UnitSystem& units) {
  spec.validate();
  const double hbar = units.hbar;
  const double d = spec.effective_delta();
  const double d0 = spec.delta0;
  const complex cm = spec.effective_minus();
  const double wp = std::norm(spec.c_plus);
  const double wm = std::norm(cm);
  const complex cross = std::conj(spec.c_plus) * cm;
  const double e = spec.overlap();
  const double s = spec.weight_sum();

  MomentSet m;
  const double shift = d * (wm - wp) / s;
  m.mean_z = spec.z0 + shift;
  const double second_about_z0 = 0.5 * d0 * d0 + d * d * (wp + wm) / s;
  m.var_z = second_about_z0 - shift * shift;

  m.mean_p = 2.0 * hbar * d * e * std::imag(cross) / (d0 * d0 * s);
  const double p2 = hbar * hbar / s *
                    ((wp + wm) / (2.0 * d0 * d0) +
                     2.0 * std::real(cross) * e * (0.5 * d0 * d0 - d * d) / (d0 * d0 * d0 * d0));
  m.var_p = p2 - m.mean_p * m.mean_p;
  m.cov_zp = (spec.z0 - m.mean_z) * m.mean_p;
  return m;
}

/// Samples the normalized wavefunction. Both peaks +- 8 D0 must lie inside the grid.
inline GridField build_wavefunction(const WavepacketSpec& spec, const SpatialGrid& grid) {
  spec.validate();
  const double d = spec.effective_delta();
  const double lo = spec.z0 - d - 8.0 * spec.delta0;
  const double hi = spec.z0 + d + 8.0 * spec.delta0;
  if (lo < grid.z_min() || hi > grid.z_max())
    throw DomainError("wavepacket support [" + std::to_string(lo) + ", " + std::to_string(hi) +
                      "] does not fit in grid [" + std::to_string(grid.z_min()) + ", " +
                      std::to_string(grid.z_max()) + "]");
  const double amp = std::sqrt(normalization_constant(spec));
  const complex cm = spec.effective_minus();
  const double inv = 1.0 / (2.0 * spec.delta0 * spec.delta0);
  GridField field(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double z = grid.position(j);
    const double a = z - spec.z0 + d;
    const double b = z - spec.z0 - d;
    field[j] = amp * (spec.c_plus * std::exp(-a * a * inv) + cm * std::exp(-b * b * inv));
  }
  return field;
}

/// Moments by rectangle quadrature; momentum through the spectral derivative.
inline MomentSet numeric_moments(const GridField& field, const UnitSystem& units, Fft& fft) {
  const double n2 = norm_squared(field);
  if (std::abs(n2 - 1.0) > 1e-8)
    throw PreconditionError("numeric_moments requires a unit-norm field (norm^2 = " +
                            std::to_string(n2) + ")");
  const double dz = field.grid.spacing();
  const auto dpsi = spectral_derivative(field, fft);
  double z1 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  for (std::size_t j = 0; j < field.size(); ++j) {
    const double rho = std::norm(field[j]);
    z1 += field.grid.position(j) * rho;
    p1 += std::imag(std::conj(field[j]) * dpsi[j]);
    p2 += std::norm(dpsi[j]);
  }
  MomentSet m;
  m.mean_z = z1 * dz;
  m.mean_p = units.hbar * p1 * dz;
  double zz = 0.0;
  double zp = 0.0;
  for (std::size_t j = 0; j < field.size(); ++j) {
    const double dzj = field.grid.position(j) - m.mean_z;
    zz += dzj * dzj * std::norm(field[j]);
    zp += dzj * std::imag(std::conj(field[j]) * dpsi[j]);
  }
  m.var_z = zz * dz;
  m.var_p = units.hbar * units.hbar * p2 * dz - m.mean_p * m.mean_p;
  m.cov_zp = units.hbar * zp * dz;
  return m;
}

inline MomentSet numeric_moments(const GridField& field, const UnitSystem& units) {
  Fft fft(field.size());
  return numeric_moments(field, units, fft);
}

/// Moments of the diagonal mixture |c+|^2 |psi+><psi+| + |c-|^2 |psi-><psi-| (normalized weights).
inline MomentSet mixture_moments(const WavepacketSpec& spec, const UnitSystem& units) {
  spec.validate();
  if (spec.kind != StateKind::cat) throw SpecError("mixture is undefined for a single Gaussian branch");
  const double wp = std::norm(spec.c_plus) / (std::norm(spec.c_plus) + std::norm(spec.c_minus));
  const double wm = 1.0 - wp;
  const double a = spec.z0 - spec.delta;
  const double b = spec.z0 + spec.delta;
  MomentSet m;
  m.mean_z = wp * a + wm * b;
  m.var_z = 0.5 * spec.delta0 * spec.delta0 + wp * wm * (b - a) * (b - a);
  m.mean_p = 0.0;
  m.var_p = units.hbar * units.hbar / (2.0 * spec.delta0 * spec.delta0);
  m.cov_zp = 0.0;
  return m;
}

/// The two branches with their mixture weights |c+-|^2 / (|c+|^2 + |c-|^2).
inline std::vector<std::pair<double, WavepacketSpec>> mixture_branches(const WavepacketSpec& spec) {
  spec.validate();
  if (spec.kind != StateKind::cat) throw SpecError("mixture is undefined for a single Gaussian branch");
  const double wp = std::norm(spec.c_plus) / (std::norm(spec.c_plus) + std::norm(spec.c_minus));
  std::vector<std::pair<double, WavepacketSpec>> out;
  if (wp > 0.0) out.emplace_back(wp, WavepacketSpec::gaussian(spec.z0 - spec.delta, spec.delta0));
  if (wp < 1.0) out.emplace_back(1.0 - wp, WavepacketSpec::gaussian(spec.z0 + spec.delta, spec.delta0));
  return out;
}

enum class Observable { position, momentum };

/// Pure-state mean minus mixture mean: the off-diagonal (interference) contribution.
inline double interference_gap(const WavepacketSpec& spec, Observable obs, const UnitSystem& units) {
  const auto pure = analytic_moments(spec, units);
  const auto mix = mixture_moments(spec, units);
  return obs == Observable::position ? pure.mean_z - mix.mean_z : pure.mean_p - mix.mean_p;
}

// Flat key-value record used by config files and result manifests.

using SpecRecord = std::map<std::string, std::string>;

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline SpecRecord to_record(const WavepacketSpec& spec) {
  return {{"kind", to_string(spec.kind)},
          {"z0", format_double(spec.z0)},
          {"delta", format_double(spec.delta)},
          {"delta0", format_double(spec.delta0)},
          {"c_plus_re", format_double(spec.c_plus.real())},
          {"c_plus_im", format_double(spec.c_plus.imag())},
          {"c_minus_re", format_double(spec.c_minus.real())},
          {"c_minus_im", format_double(spec.c_minus.imag())}};
}

inline double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ConfigError("key '" + key + "': cannot parse number '" + text + "'");
  return v;
}

/// Missing fields take defaults (gaussian at 0, delta0 = 1, c+ = 1; a cat defaults to c- = 1).
inline WavepacketSpec from_record(const SpecRecord& rec) {
  auto get = [&](const char* key, double fallback) {
    auto it = rec.find(key);
    return it == rec.end() ? fallback : parse_double(key, it->second);
  };
  WavepacketSpec s;
  if (auto it = rec.find("kind"); it != rec.end()) s.kind = parse_state_kind(it->second);
  s.z0 = get("z0", 0.0);
  s.delta = get("delta", 0.0);
  s.delta0 = get("delta0", 1.0);
  s.c_plus = {get("c_plus_re", 1.0), get("c_plus_im", 0.0)};
  const double cm_default = s.kind == StateKind::cat ? 1.0 : 0.0;
  s.c_minus = {get("c_minus_re", cm_default), get("c_minus_im", 0.0)};
  s.validate();
  return s;
}

}  // namespace qfall
