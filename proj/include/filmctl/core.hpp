#pragma once

#include <Eigen/Dense>

#include <numbers>
#include <vector>

namespace filmctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Problem definition. Reynolds, capillary number, inclination, periodic
/// domain width and the deviation/effort weighting of the quadratic cost.
struct PhysicalParams {
  double reynolds = 0.0;
  double capillary = 0.05;
  double theta = std::numbers::pi / 3.0;
  double length = 30.0;
  double beta = 0.5;

  /// Throws InvalidArgument naming the first bad field.
  void validate() const;
  double cot_theta() const;
};

/// Uniform periodic grid x_j = j*dx on [0, L), x_N identified with x_0.
class Grid {
 public:
  Grid(int nodes, double length);

  int size() const noexcept { return nodes_; }
  double length() const noexcept { return length_; }
  double dx() const noexcept { return length_ / nodes_; }
  double x(int j) const noexcept { return j * dx(); }
  Vector coordinates() const;

  /// Index of the node nearest to `x`, rounding symmetrically about L/2 so
  /// that mirror-image positions snap to mirror-image nodes.
  int nearest_node(double x) const;

  /// Integer wavenumber of FFT slot `j` in {-N/2+1, ..., N/2}.
  int wavenumber(int j) const noexcept { return j <= nodes_ / 2 ? j : j - nodes_; }

 private:
  int nodes_;
  double length_;
};

struct FilmState {
  Vector h;
  Vector q;
  double t = 0.0;

  int size() const noexcept { return static_cast<int>(h.size()); }
};

/// Flat film h = 1, q = 2/3: the steady solution of the model with no forcing.
FilmState nusselt_state(const Grid& grid);

/// Base-state flux for unit thickness.
inline constexpr double kNusseltFlux = 2.0 / 3.0;

/// Unnormalised injection profile exp[(cos(2 pi x / L) - 1) / omega^2].
double actuator_profile(double x, double omega, double length);

/// Normalisation constant alpha such that alpha * profile integrates to one
/// over a period. Evaluated by a periodic trapezoid rule fine enough to
/// resolve the profile, which is spectrally accurate for this integrand.
double actuator_normalisation(double omega, double length);

/// d(x) = alpha exp[(cos(2 pi x / L) - 1) / omega^2], unit integral.
double actuator_shape(double x, double omega, double length);

/// Centred even spacing x_i = L (i - 1/2) / count, i = 1..count.
std::vector<double> placement(int count, double length);

class ActuatorBank {
 public:
  ActuatorBank(std::vector<double> positions, double omega, double length);
  static ActuatorBank evenly_spaced(int count, double omega, double length);

  int size() const noexcept { return static_cast<int>(positions_.size()); }
  const std::vector<double>& positions() const noexcept { return positions_; }
  double omega() const noexcept { return omega_; }
  double alpha() const noexcept { return alpha_; }
  double length() const noexcept { return length_; }

  /// d(x - x_i) on every node of the grid.
  Vector shape_on(const Grid& grid, int i) const;
  /// N x M matrix whose column i is shape_on(grid, i).
  Matrix shapes_on(const Grid& grid) const;
  /// f = sum_i eta_i d(x - x_i) on the grid.
  Vector field(const Grid& grid, const Vector& amplitudes) const;

  ActuatorBank shifted(double delta) const;

 private:
  std::vector<double> positions_;
  double omega_;
  double length_;
  double alpha_;
};

/// Point observers of the interface height, each sitting on a grid node.
class ObserverBank {
 public:
  explicit ObserverBank(std::vector<int> nodes);
  static ObserverBank evenly_spaced(int count, const Grid& grid);

  int size() const noexcept { return static_cast<int>(nodes_.size()); }
  const std::vector<int>& nodes() const noexcept { return nodes_; }
  std::vector<double> positions(const Grid& grid) const;

  /// Samples of `field` at the observer nodes.
  Vector sample(const Vector& field) const;

  /// Rotate every observer by `offset` nodes on a grid of `n_nodes`.
  ObserverBank shifted(int offset, int n_nodes) const;

 private:
  std::vector<int> nodes_;
};

}  // namespace filmctl
