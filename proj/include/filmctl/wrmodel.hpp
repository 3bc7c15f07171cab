#pragma once

#include "filmctl/core.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>

namespace filmctl {

using ComplexVector = Eigen::VectorXcd;

/// Fourier collocation on a periodic grid. Holds the FFT plan, so an instance
/// must not be used from two threads at once; copies are independent.
class SpectralOps {
 public:
  explicit SpectralOps(const Grid& grid);

  int size() const noexcept { return n_; }
  double length() const noexcept { return length_; }

  /// Angular wavenumber k = 2 pi n / L of FFT slot `slot`.
  double wavenumber(int slot) const noexcept { return k_[slot]; }
  int mode_number(int slot) const noexcept { return slot <= n_ / 2 ? slot : slot - n_; }
  int nyquist_slot() const noexcept { return n_ / 2; }

  /// (i k)^order for FFT slot `slot`. Odd orders vanish at the Nyquist slot
  /// so that derivatives of real fields stay real.
  std::complex<double> symbol(int slot, int order) const;

  ComplexVector forward(const Vector& field) const;
  Vector inverse(const ComplexVector& spectrum) const;

  Vector derivative(const Vector& field, int order) const;

 private:
  int n_;
  double length_;
  Vector k_;
  mutable Eigen::FFT<double> fft_;
};

/// Spectral differentiation of a periodic field sampled on `grid`.
Vector spatial_derivative(const Grid& grid, const Vector& field, int order);

/// Wall-normal injection velocity f and the amplitudes that generated it.
struct ControlField {
  Vector f;
  Vector amplitudes;

  static ControlField zero(int n_nodes, int n_actuators = 0);
  static ControlField from_amplitudes(const Grid& grid, const ActuatorBank& bank,
                                      const Vector& amplitudes);
};

struct StateRate {
  Vector dh;
  Vector dq;
};

/// Right-hand side of the first-order weighted-residual film model:
///
///   h_t = f - q_x
///   (2 Re / 5) h^2 q_t = -q + (h^3 / 3)(2 - 2 h_x cot(theta) + h_xxx / Ca)
///                        + Re (18 q^2 h_x / 35 - 34 h q q_x / 35 + h q f / 5)
class WrModel {
 public:
  WrModel(const Grid& grid, const PhysicalParams& params, bool dealias = false);

  const PhysicalParams& params() const noexcept { return params_; }
  const SpectralOps& spectral() const noexcept { return ops_; }
  int size() const noexcept { return ops_.size(); }
  bool dealias() const noexcept { return dealias_; }

  /// Throws DomainError at the first node where h is not strictly positive
  /// or any input is not finite.
  void rhs(const Vector& h, const Vector& q, const Vector& f, Vector& dh, Vector& dq) const;
  StateRate rhs(const FilmState& state, const ControlField& control) const;

 private:
  PhysicalParams params_;
  SpectralOps ops_;
  bool dealias_;
};

StateRate wr_rhs(const FilmState& state, const ControlField& control, const PhysicalParams& params);

/// Integral of h over the period (trapezoid rule on the periodic grid).
double mass(const FilmState& state, double length);

}  // namespace filmctl
