#include "filmctl/core.hpp"

#include "filmctl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace filmctl {

const char* to_string(SynthesisError::Kind kind) noexcept {
  switch (kind) {
    case SynthesisError::Kind::NotStabilisable: return "not_stabilisable";
    case SynthesisError::Kind::FailToStart: return "fail_to_start";
    case SynthesisError::Kind::FailToConverge: return "fail_to_converge";
    case SynthesisError::Kind::SingularObservation: return "singular_observation";
    case SynthesisError::Kind::Uncontrollable: return "uncontrollable";
    case SynthesisError::Kind::Unobservable: return "unobservable";
    case SynthesisError::Kind::Precondition: return "precondition";
  }
  return "unknown";
}

void PhysicalParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(what);
  };
  require(std::isfinite(reynolds) && reynolds > 0.0, "reynolds must be positive");
  require(std::isfinite(capillary) && capillary > 0.0, "capillary must be positive");
  require(std::isfinite(theta) && theta > 0.0 && theta < std::numbers::pi / 2.0,
          "theta must lie in (0, pi/2)");
  require(std::isfinite(length) && length > 0.0, "length must be positive");
  require(std::isfinite(beta) && beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
}

double PhysicalParams::cot_theta() const { return 1.0 / std::tan(theta); }

Grid::Grid(int nodes, double length) : nodes_(nodes), length_(length) {
  if (nodes < 4 || nodes % 2 != 0)
    throw InvalidArgument("grid needs an even number of nodes >= 4, got " + std::to_string(nodes));
  if (!(length > 0.0)) throw InvalidArgument("grid length must be positive");
}

Vector Grid::coordinates() const {
  Vector x(nodes_);
  for (int j = 0; j < nodes_; ++j) x[j] = this->x(j);
  return x;
}

int Grid::nearest_node(double x) const {
  const double offset = (x - 0.5 * length_) / dx();
  const long steps = std::lround(offset);  // half away from zero: mirror-symmetric
  long node = nodes_ / 2 + steps;
  node %= nodes_;
  if (node < 0) node += nodes_;
  return static_cast<int>(node);
}

FilmState nusselt_state(const Grid& grid) {
  FilmState s;
  s.h = Vector::Ones(grid.size());
  s.q = Vector::Constant(grid.size(), kNusseltFlux);
  s.t = 0.0;
  return s;
}

double actuator_profile(double x, double omega, double length) {
  // cos(2 pi x / L) - 1 = -2 sin^2(pi x / L), free of cancellation near the
  // peak where the 1/omega^2 factor would amplify it.
  const double r = x - length * std::round(x / length);
  const double s = std::sin(std::numbers::pi * r / length);
  return std::exp(-2.0 * s * s / (omega * omega));
}

double actuator_normalisation(double omega, double length) {
  if (!(omega > 0.0) || !(length > 0.0))
    throw InvalidArgument("actuator width and domain length must be positive");
  // Fourier coefficients of the profile decay like exp(-n^2 omega^2 / 2); 32 /
  // omega points leaves the aliasing error far below round-off.
  const int points = std::max(64, static_cast<int>(std::ceil(32.0 / omega)));
  const double h = length / points;
  double sum = 0.0;
  for (int j = 0; j < points; ++j) sum += actuator_profile(j * h, omega, length);
  return 1.0 / (sum * h);
}

double actuator_shape(double x, double omega, double length) {
  return actuator_normalisation(omega, length) * actuator_profile(x, omega, length);
}

std::vector<double> placement(int count, double length) {
  if (count < 1) throw InvalidArgument("placement needs at least one site");
  std::vector<double> x(count);
  for (int i = 1; i <= count; ++i) x[i - 1] = length * (i - 0.5) / count;
  return x;
}

ActuatorBank::ActuatorBank(std::vector<double> positions, double omega, double length)
    : positions_(std::move(positions)),
      omega_(omega),
      length_(length),
      alpha_(actuator_normalisation(omega, length)) {
  if (positions_.empty()) throw InvalidArgument("actuator bank needs at least one actuator");
}

ActuatorBank ActuatorBank::evenly_spaced(int count, double omega, double length) {
  return ActuatorBank(placement(count, length), omega, length);
}

Vector ActuatorBank::shape_on(const Grid& grid, int i) const {
  Vector d(grid.size());
  const double xi = positions_.at(i);
  for (int j = 0; j < grid.size(); ++j)
    d[j] = alpha_ * actuator_profile(grid.x(j) - xi, omega_, length_);
  return d;
}

Matrix ActuatorBank::shapes_on(const Grid& grid) const {
  Matrix d(grid.size(), size());
  for (int i = 0; i < size(); ++i) d.col(i) = shape_on(grid, i);
  return d;
}

Vector ActuatorBank::field(const Grid& grid, const Vector& amplitudes) const {
  if (amplitudes.size() != size()) throw InvalidArgument("amplitude count does not match actuator count");
  return shapes_on(grid) * amplitudes;
}

ActuatorBank ActuatorBank::shifted(double delta) const {
  std::vector<double> moved(positions_);
  for (double& x : moved) {
    x = std::fmod(x + delta, length_);
    if (x < 0.0) x += length_;
  }
  return ActuatorBank(std::move(moved), omega_, length_);
}

ObserverBank::ObserverBank(std::vector<int> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InvalidArgument("observer bank needs at least one observer");
}

ObserverBank ObserverBank::evenly_spaced(int count, const Grid& grid) {
  std::vector<int> nodes;
  nodes.reserve(count);
  for (double x : placement(count, grid.length())) nodes.push_back(grid.nearest_node(x));
  return ObserverBank(std::move(nodes));
}

std::vector<double> ObserverBank::positions(const Grid& grid) const {
  std::vector<double> x;
  x.reserve(nodes_.size());
  for (int j : nodes_) x.push_back(grid.x(j));
  return x;
}

Vector ObserverBank::sample(const Vector& field) const {
  Vector out(size());
  for (int i = 0; i < size(); ++i) out[i] = field[nodes_[i]];
  return out;
}

ObserverBank ObserverBank::shifted(int offset, int n_nodes) const {
  std::vector<int> moved(nodes_);
  for (int& j : moved) j = ((j + offset) % n_nodes + n_nodes) % n_nodes;
  return ObserverBank(std::move(moved));
}

}  // namespace filmctl
