#include "filmctl/wrmodel.hpp"

#include "filmctl/errors.hpp"

#include <cmath>
#include <string>

namespace filmctl {

SpectralOps::SpectralOps(const Grid& grid) : n_(grid.size()), length_(grid.length()), k_(grid.size()) {
  for (int j = 0; j < n_; ++j) k_[j] = 2.0 * std::numbers::pi * mode_number(j) / length_;
}

std::complex<double> SpectralOps::symbol(int slot, int order) const {
  if (order == 0) return 1.0;
  if (slot == nyquist_slot() && order % 2 == 1) return 0.0;
  const std::complex<double> ik(0.0, k_[slot]);
  std::complex<double> s = ik;
  for (int p = 1; p < order; ++p) s *= ik;
  return s;
}

ComplexVector SpectralOps::forward(const Vector& field) const {
  ComplexVector out(n_);
  fft_.fwd(out, field);
  return out;
}

Vector SpectralOps::inverse(const ComplexVector& spectrum) const {
  Vector out(n_);
  fft_.inv(out, spectrum);
  return out;
}

Vector SpectralOps::derivative(const Vector& field, int order) const {
  if (order < 1 || order > 3) throw InvalidArgument("derivative order must be 1, 2 or 3");
  if (field.size() != n_) throw InvalidArgument("field size does not match grid");
  ComplexVector spec = forward(field);
  for (int j = 0; j < n_; ++j) spec[j] *= symbol(j, order);
  return inverse(spec);
}

Vector spatial_derivative(const Grid& grid, const Vector& field, int order) {
  return SpectralOps(grid).derivative(field, order);
}

ControlField ControlField::zero(int n_nodes, int n_actuators) {
  return {Vector::Zero(n_nodes), Vector::Zero(n_actuators)};
}

ControlField ControlField::from_amplitudes(const Grid& grid, const ActuatorBank& bank,
                                           const Vector& amplitudes) {
  return {bank.field(grid, amplitudes), amplitudes};
}

WrModel::WrModel(const Grid& grid, const PhysicalParams& params, bool dealias)
    : params_(params), ops_(grid), dealias_(dealias) {
  params_.validate();
}

void WrModel::rhs(const Vector& h, const Vector& q, const Vector& f, Vector& dh, Vector& dq) const {
  const int n = ops_.size();
  if (h.size() != n || q.size() != n || f.size() != n)
    throw InvalidArgument("state and control must match the grid size");
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(h[j]) || !std::isfinite(q[j]) || !std::isfinite(f[j]))
      throw DomainError("non-finite value at node " + std::to_string(j), j);
    if (!(h[j] > 0.0))
      throw DomainError("film height " + std::to_string(h[j]) + " not positive at node " + std::to_string(j), j);
  }

  const ComplexVector h_hat = ops_.forward(h);
  const ComplexVector q_hat = ops_.forward(q);
  ComplexVector work(n);
  auto apply = [&](const ComplexVector& src, int order) {
    for (int j = 0; j < n; ++j) work[j] = src[j] * ops_.symbol(j, order);
    return ops_.inverse(work);
  };
  const Vector hx = apply(h_hat, 1);
  const Vector hxxx = apply(h_hat, 3);
  const Vector qx = apply(q_hat, 1);

  const double re = params_.reynolds;
  const double cot = params_.cot_theta();
  const double inv_ca = 1.0 / params_.capillary;

  dh = f - qx;
  dq.resize(n);
  for (int j = 0; j < n; ++j) {
    const double hj = h[j], qj = q[j];
    const double h3 = hj * hj * hj / 3.0;
    const double bracket = -qj + h3 * (2.0 - 2.0 * hx[j] * cot + hxxx[j] * inv_ca) +
                           re * (18.0 * qj * qj * hx[j] / 35.0 - 34.0 * hj * qj * qx[j] / 35.0 +
                                 hj * qj * f[j] / 5.0);
    dq[j] = 5.0 / (2.0 * re * hj * hj) * bracket;
  }

  if (dealias_) {
    const int cutoff = n / 3;
    auto filter = [&](Vector& v) {
      ComplexVector s = ops_.forward(v);
      for (int j = 0; j < n; ++j)
        if (std::abs(ops_.mode_number(j)) > cutoff) s[j] = 0.0;
      v = ops_.inverse(s);
    };
    filter(dh);
    filter(dq);
  }
}

StateRate WrModel::rhs(const FilmState& state, const ControlField& control) const {
  StateRate out;
  rhs(state.h, state.q, control.f, out.dh, out.dq);
  return out;
}

StateRate wr_rhs(const FilmState& state, const ControlField& control, const PhysicalParams& params) {
  const Grid grid(state.size(), params.length);
  return WrModel(grid, params).rhs(state, control);
}

double mass(const FilmState& state, double length) {
  return state.h.sum() * length / static_cast<double>(state.h.size());
}

}  // namespace filmctl
