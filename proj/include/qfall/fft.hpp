#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "qfall/core.hpp"

namespace qfall {

namespace detail {
// The FFTW planner is not re-entrant; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// In-place complex FFT of fixed size. Forward is unnormalized, inverse divides by n.
/// One instance per thread; plans are created with FFTW_ESTIMATE so results are
/// reproducible run to run.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n) {
    buffer_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (buffer_ == nullptr) throw std::bad_alloc();
    std::lock_guard lock(detail::fftw_planner_mutex());
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_1d(len, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(len, buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  ~Fft() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buffer_);
  }

  std::size_t size() const { return n_; }

  void forward(std::span<complex> data) { run(forward_, data, 1.0); }
  void inverse(std::span<complex> data) { run(backward_, data, 1.0 / static_cast<double>(n_)); }

 private:
  void run(fftw_plan plan, std::span<complex> data, double scale) {
    auto* buf = reinterpret_cast<complex*>(buffer_);
    std::copy(data.begin(), data.end(), buf);
    fftw_execute(plan);
    if (scale == 1.0) {
      std::copy(buf, buf + n_, data.begin());
    } else {
      for (std::size_t j = 0; j < n_; ++j) data[j] = buf[j] * scale;
    }
  }

  std::size_t n_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// d/dz of a periodic band-limited field (multiplication by i k).
inline std::vector<complex> spectral_derivative(const GridField& field, Fft& fft) {
  std::vector<complex> d(field.amplitudes);
  fft.forward(d);
  for (std::size_t j = 0; j < d.size(); ++j) d[j] *= complex(0.0, field.grid.wavenumber(j));
  fft.inverse(d);
  return d;
}

inline std::vector<complex> spectral_derivative(const GridField& field) {
  Fft fft(field.size());
  return spectral_derivative(field, fft);
}

/// Evaluates the band-limited interpolant of a grid field, and its derivative, at a
/// fixed off-grid point in O(n) per evaluation.
class SpectralProbe {
 public:
  SpectralProbe(const SpatialGrid& grid, double z) : z_(z), value_w_(grid.size()), deriv_w_(grid.size()) {
    if (!grid.contains(z)) throw DomainError("probe position lies outside the grid");
    const std::size_t n = grid.size();
    const double x = z - grid.z_min();
    for (std::size_t j = 0; j < n; ++j) {
      const double k = grid.wavenumber(j);
      const complex e = std::polar(1.0, k * x) / static_cast<double>(n);
      value_w_[j] = e;
      deriv_w_[j] = complex(0.0, k) * e;
    }
    Fft fft(n);
    fft.forward(value_w_);
    fft.forward(deriv_w_);
  }

  double position() const { return z_; }

  complex value(std::span<const complex> psi) const { return dot(value_w_, psi); }
  complex derivative(std::span<const complex> psi) const { return dot(deriv_w_, psi); }

 private:
  static complex dot(const std::vector<complex>& w, std::span<const complex> psi) {
    complex s{0.0, 0.0};
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * psi[j];
    return s;
  }

  double z_;
  std::vector<complex> value_w_;
  std::vector<complex> deriv_w_;
};

}  // namespace qfall
