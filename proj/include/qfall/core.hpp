#pragma once

// Units, grids and the sampled wavefunction container.

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qfall/errors.hpp"

namespace qfall {

using complex = std::complex<double>;

/// Unit system. The defaults are dimensionless simulation units; physical
/// inputs are mapped by setting hbar, g and the reference scales explicitly.
struct UnitSystem {
  double hbar = 1.0;
  double g = 1.0;
  double length_ref = 1.0;
  double mass_ref = 1.0;

  void validate() const {
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ConfigError("hbar must be positive");
    if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("g must be non-negative");
    if (!(length_ref > 0.0)) throw ConfigError("length_ref must be positive");
    if (!(mass_ref > 0.0)) throw ConfigError("mass_ref must be positive");
  }

  /// hbar / (m_ref * length_ref): the natural velocity scale.
  double velocity_scale() const { return hbar / (mass_ref * length_ref); }

  /// hbar / m, the quantum diffusion coefficient of a particle of mass m.
  double diffusion(double mass) const { return hbar / mass; }

  /// Classical fall time sqrt(2 h / g) from height h.
  double fall_time(double height) const {
    if (!(g > 0.0)) throw ConfigError("fall time undefined for g = 0");
    return std::sqrt(2.0 * height / g);
  }
};

struct MassPair {
  double inertial = 1.0;
  double gravitational = 1.0;

  void validate() const {
    if (!(inertial > 0.0) || !std::isfinite(inertial))
      throw ConfigError("m_inertial must be positive");
    if (!(gravitational > 0.0) || !std::isfinite(gravitational))
      throw ConfigError("m_gravitational must be positive");
  }

  double gravitational_to_inertial() const { return gravitational / inertial; }
  double inertial_to_gravitational() const { return inertial / gravitational; }

  bool operator==(const MassPair&) const = default;
};

/// Uniform periodic grid z_j = z_min + j*dz, j = 0..n-1, dz = (z_max - z_min)/n.
class SpatialGrid {
 public:
  SpatialGrid() = default;

  double z_min() const { return z_min_; }
  double z_max() const { return z_max_; }
  std::size_t size() const { return n_; }
  double length() const { return z_max_ - z_min_; }
  double spacing() const { return length() / static_cast<double>(n_); }
  double position(std::size_t j) const { return z_min_ + static_cast<double>(j) * spacing(); }

  /// Wavenumber of FFT bin j: 2*pi*k/L with k in [-n/2, n/2).
  double wavenumber(std::size_t j) const {
    const auto half = static_cast<std::ptrdiff_t>(n_ / 2);
    auto k = static_cast<std::ptrdiff_t>(j);
    if (k >= half) k -= static_cast<std::ptrdiff_t>(n_);
    return 2.0 * std::numbers::pi * static_cast<double>(k) / length();
  }

  /// Nyquist wavenumber pi*n/L.
  double max_wavenumber() const { return std::numbers::pi / spacing(); }

  std::vector<double> positions() const {
    std::vector<double> z(n_);
    for (std::size_t j = 0; j < n_; ++j) z[j] = position(j);
    return z;
  }

  std::vector<double> wavenumbers() const {
    std::vector<double> k(n_);
    for (std::size_t j = 0; j < n_; ++j) k[j] = wavenumber(j);
    return k;
  }

  bool contains(double z) const { return z >= z_min_ && z < z_max_; }

  bool operator==(const SpatialGrid&) const = default;

 private:
  friend SpatialGrid make_grid(double, double, std::size_t);
  SpatialGrid(double lo, double hi, std::size_t n) : z_min_(lo), z_max_(hi), n_(n) {}

  double z_min_ = 0.0;
  double z_max_ = 1.0;
  std::size_t n_ = 0;
};

inline SpatialGrid make_grid(double z_min, double z_max, std::size_t n_points) {
  if (!std::isfinite(z_min) || !std::isfinite(z_max) || !(z_min < z_max))
    throw ConfigError("grid bounds must satisfy z_min < z_max");
  if (n_points < 16 || !std::has_single_bit(n_points))
    throw ConfigError("grid size must be a power of two >= 16, got " + std::to_string(n_points));
  return SpatialGrid(z_min, z_max, n_points);
}

/// Complex wavefunction sampled on a SpatialGrid.
struct GridField {
  SpatialGrid grid;
  std::vector<complex> amplitudes;

  GridField() = default;
  explicit GridField(const SpatialGrid& g) : grid(g), amplitudes(g.size()) {}
  GridField(const SpatialGrid& g, std::vector<complex> a) : grid(g), amplitudes(std::move(a)) {
    if (amplitudes.size() != grid.size()) throw ConfigError("amplitude count does not match grid");
  }

  std::size_t size() const { return amplitudes.size(); }
  complex& operator[](std::size_t j) { return amplitudes[j]; }
  const complex& operator[](std::size_t j) const { return amplitudes[j]; }
  std::span<complex> span() { return amplitudes; }
  std::span<const complex> span() const { return amplitudes; }
};

/// Rectangle-rule integral sum_j f_j dz.
inline double integrate(std::span<const double> f, double dz) {
  double s = 0.0;
  for (double v : f) s += v;
  return s * dz;
}

inline double norm_squared(const GridField& field) {
  double s = 0.0;
  for (const auto& a : field.amplitudes) s += std::norm(a);
  return s * field.grid.spacing();
}

inline double norm(const GridField& field) { return std::sqrt(norm_squared(field)); }

inline void normalize(GridField& field) {
  const double n = norm(field);
  if (!(n > 0.0)) throw PreconditionError("cannot normalize an all-zero field");
  for (auto& a : field.amplitudes) a /= n;
}

/// <a|b> by rectangle quadrature.
inline complex inner_product(const GridField& a, const GridField& b) {
  complex s{0.0, 0.0};
  for (std::size_t j = 0; j < a.size(); ++j) s += std::conj(a[j]) * b[j];
  return s * a.grid.spacing();
}

/// L2 distance ||a - b||.
inline double l2_distance(const GridField& a, const GridField& b) {
  if (!(a.grid == b.grid)) throw PreconditionError("fields live on different grids");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::norm(a[j] - b[j]);
  return std::sqrt(s * a.grid.spacing());
}

/// Probability carried by the `width` outermost points at each end of the grid.
inline double boundary_probability(std::span<const complex> amplitudes, double dz,
                                   std::size_t width = 5) {
  const std::size_t n = amplitudes.size();
  width = std::min(width, n / 2);
  double s = 0.0;
  for (std::size_t j = 0; j < width; ++j)
    s += std::norm(amplitudes[j]) + std::norm(amplitudes[n - 1 - j]);
  return s * dz;
}

inline double boundary_probability(const GridField& field, std::size_t width = 5) {
  return boundary_probability(field.span(), field.grid.spacing(), width);
}

/// Default guard: probability within 5 spacings of either edge must stay below 1e-10.
inline constexpr double kBoundaryGuardThreshold = 1e-10;
inline constexpr std::size_t kBoundaryGuardWidth = 5;

}  // namespace qfall
