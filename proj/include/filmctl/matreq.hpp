#pragma once

#include "filmctl/core.hpp"

#include <optional>
#include <string>

namespace filmctl {

/// A matrix counts as Hurwitz when its spectral abscissa is below -margin, so
/// marginal loops (e.g. an untouched neutral mass mode) are rejected.
inline constexpr double kHurwitzMargin = 1e-10;

bool is_hurwitz(const Matrix& a, double margin = kHurwitzMargin);

/// Real Schur factorisation of a stable matrix, reusable for any number of
/// Lyapunov right-hand sides in either orientation (Bartels-Stewart).
class LyapunovSolver {
 public:
  /// Throws StabilityError when `a` is not Hurwitz.
  explicit LyapunovSolver(const Matrix& a, double margin = kHurwitzMargin);

  /// S with a S + S a^T + w = 0.
  Matrix solve(const Matrix& w) const;
  /// Q with a^T Q + Q a + w = 0.
  Matrix solve_transposed(const Matrix& w) const;

  double abscissa() const noexcept { return abscissa_; }
  const Matrix& matrix() const noexcept { return a_; }

 private:
  Matrix sylvester(const Matrix& w, bool transposed) const;

  Matrix a_;
  Matrix t_;
  Matrix t_rev_;  ///< J t^T J, upper quasi-triangular
  Matrix z_;
  double abscissa_;
};

/// Solution of a s + s a^T + w = 0 for Hurwitz `a` and symmetric `w`.
Matrix solve_lyapunov(const Matrix& a, const Matrix& w);
/// Frobenius norm of a s + s a^T + w.
double lyapunov_residual(const Matrix& a, const Matrix& s, const Matrix& w);

struct CareOptions {
  double tolerance = 1e-9;  ///< target residual relative to ||u||_F
  int refinement_steps = 6;
};

/// Stabilising solution of a^T q + q a - q b v^-1 b^T q + u = 0, by the
/// ordered Schur decomposition of the Hamiltonian followed by Newton
/// refinement. Throws SynthesisError(NotStabilisable) when no stabilising
/// solution is found.
Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& u, const Matrix& v,
                  const CareOptions& options = {});
double care_residual(const Matrix& a, const Matrix& b, const Matrix& u, const Matrix& v, const Matrix& q);

/// k = -v^-1 b^T q, so that a + b k is the closed loop.
Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& u, const Matrix& v,
                const CareOptions& options = {});

struct SofOptions {
  double tolerance = 1e-8;  ///< on the stationarity residual, max norm
  int max_iterations = 500;
  double gamma_floor = 1e-8;
  double margin = kHurwitzMargin;
  /// Fixed-point sweeps per continuation stage while hunting a stabilising start.
  int continuation_sweeps = 50;
  int continuation_stages = 60;
};

struct SofSolution {
  Matrix k;  ///< m x p
  Matrix q;
  Matrix s;
  double residual = 0.0;  ///< max over the three optimality conditions, max norm
  int iterations = 0;
  bool converged = false;

  std::string initialisation;  ///< "given", "lqr_projection" or "shift_continuation"
  int continuation_stages = 0;
  int fixed_point_iterations = 0;
  int newton_iterations = 0;
  double closed_loop_abscissa = 0.0;
};

struct SofResiduals {
  double lyapunov_q = 0.0;     ///< A_c^T Q + Q A_c + U + C^T K^T V K C
  double lyapunov_s = 0.0;     ///< A_c S + S A_c^T + I
  double stationarity = 0.0;   ///< V K C S C^T + B^T Q S C^T
  double max() const;
};

/// Optimal static output feedback for eta = K C xi minimising the LQ cost
/// with unit initial-state covariance. Starts from `k0`, or from the LQR gain
/// projected onto the outputs, falling back to a spectral-shift continuation
/// when that projection does not stabilise. Damped fixed-point sweeps are
/// followed by Newton steps on the stationarity condition.
///
/// Throws SynthesisError with kind FailToStart, FailToConverge or
/// SingularObservation.
SofSolution solve_sof(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& u, const Matrix& v,
                      const std::optional<Matrix>& k0 = std::nullopt, const SofOptions& options = {});

SofResiduals sof_residuals(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& u,
                           const Matrix& v, const Matrix& k, const Matrix& q, const Matrix& s);

/// LQ cost trace(Q) of a stabilising output gain.
double sof_cost(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& u, const Matrix& v,
                const Matrix& k);
/// V K C S C^T + B^T Q S C^T at `k`, which is half the gradient of sof_cost.
Matrix sof_stationarity(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& u,
                        const Matrix& v, const Matrix& k);

}  // namespace filmctl
