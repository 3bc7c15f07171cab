#include "filmctl/linsys.hpp"

#include "filmctl/errors.hpp"
#include "lapack.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace filmctl {

Eigen::Matrix2cd linear_symbol(const PhysicalParams& params, const SpectralOps& ops, int slot) {
  const std::complex<double> d1 = ops.symbol(slot, 1);
  const std::complex<double> d3 = ops.symbol(slot, 3);
  const double re = params.reynolds;
  const double c = 5.0 / (2.0 * re);
  Eigen::Matrix2cd m;
  m(0, 0) = 0.0;
  m(0, 1) = -d1;
  m(1, 0) = c * (2.0 - (2.0 / 3.0) * params.cot_theta() * d1 + d3 / (3.0 * params.capillary) +
                 re * (8.0 / 35.0) * d1);
  m(1, 1) = c * (-1.0 - re * (68.0 / 105.0) * d1);
  return m;
}

Matrix circulant_from_symbol(const SpectralOps& ops, const ComplexVector& symbol) {
  const int n = ops.size();
  const Vector column = ops.inverse(symbol);
  Matrix out(n, n);
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j) out(j, l) = column[((j - l) % n + n) % n];
  return out;
}

LinearSystem linearize(const PhysicalParams& params, const Grid& grid, const ActuatorBank& actuators,
                       const ObserverBank& observers) {
  params.validate();
  const int n = grid.size();
  const SpectralOps ops(grid);

  ComplexVector sym[2][2];
  for (auto& row : sym)
    for (auto& s : row) s.resize(n);
  for (int j = 0; j < n; ++j) {
    const Eigen::Matrix2cd m = linear_symbol(params, ops, j);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) sym[r][c][j] = m(r, c);
  }

  LinearSystem sys;
  sys.nodes = n;
  sys.params = params;
  sys.a.setZero(2 * n, 2 * n);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) sys.a.block(r * n, c * n, n, n) = circulant_from_symbol(ops, sym[r][c]);

  // Injection enters the height equation directly and the flux equation via
  // (5 / (2 Re h^2)) Re h q f / 5 = f / 3 at the base state.
  const Matrix d = actuators.shapes_on(grid);
  sys.b.resize(2 * n, actuators.size());
  sys.b.topRows(n) = d;
  sys.b.bottomRows(n) = d / 3.0;

  sys.c.setZero(observers.size(), 2 * n);
  for (int i = 0; i < observers.size(); ++i) {
    const int node = observers.nodes()[i];
    if (node < 0 || node >= n) throw InvalidArgument("observer node outside the grid");
    sys.c(i, node) = 1.0;
  }

  sys.u.setZero(2 * n, 2 * n);
  sys.u.topLeftCorner(n, n).diagonal().setConstant(params.beta * params.length / n);
  sys.v = (1.0 - params.beta) * Matrix::Identity(actuators.size(), actuators.size());
  return sys;
}

Matrix resolved_fourier_basis(int nodes) {
  const int n = nodes;
  Matrix phi(n, n - 1);
  const double c0 = 1.0 / std::sqrt(static_cast<double>(n));
  const double c1 = std::sqrt(2.0 / n);
  phi.col(0).setConstant(c0);
  for (int m = 1; m < n / 2; ++m) {
    for (int j = 0; j < n; ++j) {
      const double theta = 2.0 * std::numbers::pi * m * j / n;
      phi(j, 2 * m - 1) = c1 * std::cos(theta);
      phi(j, 2 * m) = c1 * std::sin(theta);
    }
  }
  return phi;
}

ResolvedSystem resolve(const LinearSystem& sys) {
  const int n = sys.nodes;
  const Matrix phi = resolved_fourier_basis(n);
  ResolvedSystem r;
  r.basis.setZero(2 * n, 2 * (n - 1));
  r.basis.topLeftCorner(n, n - 1) = phi;
  r.basis.bottomRightCorner(n, n - 1) = phi;
  r.a = r.basis.transpose() * sys.a * r.basis;
  r.b = r.basis.transpose() * sys.b;
  r.c = sys.c * r.basis;
  r.u = r.basis.transpose() * sys.u * r.basis;
  r.u = 0.5 * (r.u + r.u.transpose());
  r.v = sys.v;
  return r;
}

ComplexVector eigenvalues(const Matrix& m) { return lapack::eigenvalues(m); }

double spectral_abscissa(const Matrix& m) {
  if (m.rows() == 0) return -std::numeric_limits<double>::infinity();
  return eigenvalues(m).real().maxCoeff();
}

namespace {

// Fix the phase of each eigenvector so its largest entry is real and positive;
// real blocks then yield real eigenvectors.
void normalise_phase(Eigen::Matrix2cd& vectors) {
  for (int b = 0; b < 2; ++b) {
    int big = std::abs(vectors(0, b)) >= std::abs(vectors(1, b)) ? 0 : 1;
    const std::complex<double> phase = vectors(big, b) / std::abs(vectors(big, b));
    vectors.col(b) /= phase;
    vectors.col(b) /= vectors.col(b).norm();
  }
}

WavenumberBlock analyse_block(const PhysicalParams& params, const SpectralOps& ops, int slot) {
  WavenumberBlock wb;
  wb.slot = slot;
  wb.mode_number = ops.mode_number(slot);
  wb.k = ops.wavenumber(slot);
  wb.block = linear_symbol(params, ops, slot);
  Eigen::ComplexEigenSolver<Eigen::Matrix2cd> solver(wb.block);
  Eigen::Vector2cd values = solver.eigenvalues();
  Eigen::Matrix2cd vectors = solver.eigenvectors();
  if (values[1].real() > values[0].real()) {
    std::swap(values[0], values[1]);
    vectors.col(0).swap(vectors.col(1));
  }
  normalise_phase(vectors);
  wb.values = values;
  wb.vectors = vectors;
  wb.duals = vectors.inverse();
  return wb;
}

}  // namespace

ModalDecomposition modal_spectrum(const LinearSystem& sys) {
  const Grid grid(sys.nodes, sys.params.length);
  const SpectralOps ops(grid);
  const int n = sys.nodes;

  ModalDecomposition md;
  md.blocks.reserve(n);
  for (int j = 0; j < n; ++j) md.blocks.push_back(analyse_block(sys.params, ops, j));

  for (int j = 0; j < n / 2; ++j) {
    for (int b = 0; b < 2; ++b) {
      ModeRef ref;
      ref.mode_number = j;
      ref.branch = b;
      ref.value = md.blocks[j].values[b];
      ref.real_dims = j == 0 ? 1 : 2;
      md.ranking.push_back(ref);
    }
  }
  std::stable_sort(md.ranking.begin(), md.ranking.end(),
                   [](const ModeRef& x, const ModeRef& y) { return x.value.real() > y.value.real(); });

  for (const ModeRef& m : md.ranking) {
    if (m.value.real() > kModeTolerance) {
      md.unstable_real_dims += m.real_dims;
      ++md.unstable_complex_modes;
    } else if (m.value.real() >= -kModeTolerance) {
      md.neutral_real_dims += m.real_dims;
    }
  }
  return md;
}

ModalDecomposition modal_decompose(const LinearSystem& sys, int retain) {
  ModalDecomposition md = modal_spectrum(sys);
  const int n = sys.nodes;
  const int total = 2 * (n - 1);
  if (retain < md.unstable_real_dims)
    throw SynthesisError(SynthesisError::Kind::Precondition,
                         "retained dimension " + std::to_string(retain) + " is below the " +
                             std::to_string(md.unstable_real_dims) + " unstable real dimensions");
  if (retain < 1 || retain > total)
    throw InvalidArgument("retained dimension must lie in [1, " + std::to_string(total) + "]");

  int dims = 0;
  for (const ModeRef& m : md.ranking) {
    if (dims >= retain) break;
    md.retained.push_back(m);
    dims += m.real_dims;
  }
  md.requested_dim = retain;
  md.retained_dim = dims;
  md.adjusted = dims != retain;

  md.a_u.setZero(dims, dims);
  md.restrict_.setZero(dims, 2 * n);
  md.prolong.setZero(2 * n, dims);

  int col = 0;
  for (const ModeRef& m : md.retained) {
    const WavenumberBlock& wb = md.blocks[m.mode_number];
    const Eigen::Vector2cd v = wb.vectors.col(m.branch);
    const Eigen::RowVector2cd w = wb.duals.row(m.branch);
    if (m.mode_number == 0) {
      md.a_u(col, col) = m.value.real();
      for (int j = 0; j < n; ++j) {
        md.restrict_(col, j) = w[0].real() / n;
        md.restrict_(col, n + j) = w[1].real() / n;
        md.prolong(j, col) = v[0].real();
        md.prolong(n + j, col) = v[1].real();
      }
      col += 1;
      continue;
    }
    const double sigma = m.value.real(), omega = m.value.imag();
    md.a_u(col, col) = sigma;
    md.a_u(col, col + 1) = -omega;
    md.a_u(col + 1, col) = omega;
    md.a_u(col + 1, col + 1) = sigma;
    for (int j = 0; j < n; ++j) {
      const double theta = 2.0 * std::numbers::pi * m.mode_number * j / n;
      const std::complex<double> e(std::cos(theta), std::sin(theta));
      const std::complex<double> rh = w[0] * std::conj(e) / static_cast<double>(n);
      const std::complex<double> rq = w[1] * std::conj(e) / static_cast<double>(n);
      md.restrict_(col, j) = rh.real();
      md.restrict_(col + 1, j) = rh.imag();
      md.restrict_(col, n + j) = rq.real();
      md.restrict_(col + 1, n + j) = rq.imag();
      const std::complex<double> ph = v[0] * e;
      const std::complex<double> pq = v[1] * e;
      md.prolong(j, col) = 2.0 * ph.real();
      md.prolong(j, col + 1) = -2.0 * ph.imag();
      md.prolong(n + j, col) = 2.0 * pq.real();
      md.prolong(n + j, col + 1) = -2.0 * pq.imag();
    }
    col += 2;
  }

  md.b_u = md.restrict_ * sys.b;
  md.sampling = sys.c * md.prolong;
  md.u_u = md.prolong.transpose() * sys.u * md.prolong;
  md.u_u = 0.5 * (md.u_u + md.u_u.transpose());
  return md;
}

ComplexVector block_eigenvalues(const ModalDecomposition& modes) {
  ComplexVector out(2 * modes.blocks.size());
  for (std::size_t i = 0; i < modes.blocks.size(); ++i) out.segment<2>(2 * i) = modes.blocks[i].values;
  return out;
}

int count_unstable(const ComplexVector& values) {
  return static_cast<int>((values.real().array() > kModeTolerance).count());
}

Matrix blockwise_shift(int nodes, int offset) {
  Matrix p = Matrix::Zero(2 * nodes, 2 * nodes);
  for (int half = 0; half < 2; ++half)
    for (int j = 0; j < nodes; ++j) p(half * nodes + j, half * nodes + ((j - offset) % nodes + nodes) % nodes) = 1.0;
  return p;
}

}  // namespace filmctl
