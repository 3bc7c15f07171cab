#pragma once

#include "filmctl/core.hpp"
#include "filmctl/wrmodel.hpp"

#include <complex>
#include <vector>

namespace filmctl {

using ComplexMatrix = Eigen::MatrixXcd;

/// Linearisation of the film model about the flat Nusselt film on a grid of N
/// nodes. The state is xi = (h - 1, q - 2/3) stacked, so `a` is 2N x 2N.
struct LinearSystem {
  Matrix a;  ///< 2N x 2N
  Matrix b;  ///< 2N x M, column i injects d(x - x_i)
  Matrix c;  ///< P x 2N, samples h at the observer nodes
  Matrix u;  ///< 2N x 2N, (beta L / N) I on the height block
  Matrix v;  ///< M x M, (1 - beta) I

  int nodes = 0;
  PhysicalParams params;

  int state_dim() const noexcept { return static_cast<int>(a.rows()); }
  int inputs() const noexcept { return static_cast<int>(b.cols()); }
  int outputs() const noexcept { return static_cast<int>(c.rows()); }
};

LinearSystem linearize(const PhysicalParams& params, const Grid& grid, const ActuatorBank& actuators,
                       const ObserverBank& observers);

/// 2x2 symbol of the linear operator acting on (h_n, q_n) at FFT slot `slot`.
Eigen::Matrix2cd linear_symbol(const PhysicalParams& params, const SpectralOps& ops, int slot);

/// Circulant matrix whose action is multiplication by `symbol` in Fourier
/// space.
Matrix circulant_from_symbol(const SpectralOps& ops, const ComplexVector& symbol);

/// Orthonormal real Fourier basis of R^N without the Nyquist mode. Columns are
/// ordered constant, cos(1), sin(1), cos(2), sin(2), ..., sin(N/2 - 1).
Matrix resolved_fourier_basis(int nodes);

/// The linear system restricted to the subspace free of the Nyquist
/// checkerboard. On an even grid that mode carries a zero eigenvalue which no
/// smooth actuator can reach; the restriction is A-invariant, so closed-loop
/// spectra on it are exactly the spectra of the controllable dynamics.
struct ResolvedSystem {
  Matrix a, b, c, u, v;
  Matrix basis;  ///< 2N x (2N - 2), orthonormal; xi = basis * xi_r

  int state_dim() const noexcept { return static_cast<int>(a.rows()); }
  Vector reduce(const Vector& xi) const { return basis.transpose() * xi; }
  Vector expand(const Vector& xi_r) const { return basis * xi_r; }
};

ResolvedSystem resolve(const LinearSystem& sys);

/// Eigenvalues of a dense real matrix.
ComplexVector eigenvalues(const Matrix& m);
double spectral_abscissa(const Matrix& m);

struct WavenumberBlock {
  int slot = 0;
  int mode_number = 0;
  double k = 0.0;
  Eigen::Matrix2cd block;
  Eigen::Vector2cd values;
  Eigen::Matrix2cd vectors;  ///< columns are right eigenvectors
  Eigen::Matrix2cd duals;    ///< inverse of `vectors`; row b pairs with column b
};

/// One eigenmode of the linear operator. Modes with mode_number > 0 stand for
/// the conjugate pair (+n, -n) and carry two real dimensions; mode_number 0
/// modes are real and carry one.
struct ModeRef {
  int mode_number = 0;
  int branch = 0;
  std::complex<double> value;
  int real_dims = 1;
};

struct ModalDecomposition {
  std::vector<WavenumberBlock> blocks;  ///< one per FFT slot
  std::vector<ModeRef> ranking;         ///< resolved modes, real part descending
  std::vector<ModeRef> retained;

  int requested_dim = 0;
  int retained_dim = 0;
  bool adjusted = false;  ///< retained_dim = requested_dim + 1 to keep a pair whole

  int unstable_real_dims = 0;
  int unstable_complex_modes = 0;
  int neutral_real_dims = 0;  ///< |Re lambda| <= tolerance, e.g. the mass mode

  Matrix a_u;        ///< retained_dim x retained_dim, real form of the retained dynamics
  Matrix b_u;        ///< retained_dim x M
  Matrix restrict_;  ///< retained_dim x 2N, state -> modal coordinates
  Matrix prolong;    ///< 2N x retained_dim, modal coordinates -> state
  Matrix sampling;   ///< P x retained_dim, c * prolong
  Matrix u_u;        ///< prolong^T u prolong
};

/// Real-part threshold separating unstable from neutral modes.
inline constexpr double kModeTolerance = 1e-10;

/// Blockwise modal analysis of `sys` and extraction of the `retain` slowest
/// decaying resolved modes. Throws SynthesisError(Precondition) when `retain`
/// is below the number of unstable real dimensions.
ModalDecomposition modal_decompose(const LinearSystem& sys, int retain);

/// Per-wavenumber blocks and the full ranking, without choosing a subspace.
ModalDecomposition modal_spectrum(const LinearSystem& sys);

/// Every block eigenvalue, i.e. the spectrum of `sys.a`.
ComplexVector block_eigenvalues(const ModalDecomposition& modes);

/// Number of eigenvalues with real part above kModeTolerance.
int count_unstable(const ComplexVector& values);

/// Cyclic one-node shift applied to both halves of a stacked (h, q) state.
Matrix blockwise_shift(int nodes, int offset = 1);

}  // namespace filmctl
