#include "filmctl/matreq.hpp"

#include "filmctl/errors.hpp"
#include "filmctl/linsys.hpp"
#include "lapack.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>
#include <memory>
#include <string>

namespace filmctl {

bool is_hurwitz(const Matrix& a, double margin) { return spectral_abscissa(a) < -margin; }

LyapunovSolver::LyapunovSolver(const Matrix& a, double margin) : a_(a) {
  if (a.rows() != a.cols()) throw InvalidArgument("lyapunov: matrix must be square");
  lapack::RealSchur rs = lapack::schur(a);
  abscissa_ = rs.values.size() ? rs.values.real().maxCoeff() : -std::numeric_limits<double>::infinity();
  if (!(abscissa_ < -margin))
    throw StabilityError("lyapunov: matrix is not Hurwitz (abscissa " + std::to_string(abscissa_) + ")");
  t_ = std::move(rs.t);
  z_ = std::move(rs.z);
  t_rev_ = t_.transpose().reverse();
}

namespace {

constexpr Eigen::Index kSylvesterLeaf = 48;
// Relative residual above which a Lyapunov solve gets one refinement pass.
constexpr double kRefineTolerance = 1e-11;

// Split point near the middle that does not cut a 2x2 diagonal block.
Eigen::Index split_point(const Eigen::Ref<const Matrix>& t) {
  Eigen::Index k = t.rows() / 2;
  if (t(k, k - 1) != 0.0) ++k;
  return k;
}

// Recursive blocked solver for a x + x b^T = c with a, b upper quasi-triangular;
// the off-diagonal work is matrix products and only the leaves go to dtrsyl.
void triangular_sylvester(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                          Eigen::Ref<Matrix> c) {
  const Eigen::Index m = a.rows(), n = b.rows();
  if (m <= kSylvesterLeaf && n <= kSylvesterLeaf) {
    Matrix ta = a, tb = b, x = c;
    const double scale = lapack::trsyl('N', 'T', 1, ta, tb, x);
    c = x / scale;
    return;
  }
  if (m >= n) {
    const Eigen::Index k = split_point(a);
    triangular_sylvester(a.bottomRightCorner(m - k, m - k), b, c.bottomRows(m - k));
    c.topRows(k).noalias() -= a.topRightCorner(k, m - k) * c.bottomRows(m - k);
    triangular_sylvester(a.topLeftCorner(k, k), b, c.topRows(k));
  } else {
    const Eigen::Index k = split_point(b);
    triangular_sylvester(a, b.bottomRightCorner(n - k, n - k), c.rightCols(n - k));
    c.leftCols(k).noalias() -= c.rightCols(n - k) * b.topRightCorner(k, n - k).transpose();
    triangular_sylvester(a, b.topLeftCorner(k, k), c.leftCols(k));
  }
}

}  // namespace

Matrix LyapunovSolver::sylvester(const Matrix& w, bool transposed) const {
  // a = z t z^T; transform, solve the quasi-triangular equation, transform back.
  // The transposed equation t^T y + y t = c becomes t' y' + y' t'^T = c' under
  // index reversal, with t' = J t^T J upper quasi-triangular again.
  Matrix c = -(z_.transpose() * w * z_);
  if (transposed) {
    c = c.reverse().eval();
    triangular_sylvester(t_rev_, t_rev_, c);
    c = c.reverse().eval();
  } else {
    triangular_sylvester(t_, t_, c);
  }
  Matrix x = z_ * c * z_.transpose();
  return 0.5 * (x + x.transpose());
}

Matrix LyapunovSolver::solve(const Matrix& w) const {
  Matrix s = sylvester(w, false);
  // One step of iterative refinement on the same factorisation.
  const Matrix r = a_ * s + s * a_.transpose() + w;
  if (r.norm() > kRefineTolerance * w.norm()) s += sylvester(r, false);
  return s;
}

Matrix LyapunovSolver::solve_transposed(const Matrix& w) const {
  Matrix q = sylvester(w, true);
  const Matrix r = a_.transpose() * q + q * a_ + w;
  if (r.norm() > kRefineTolerance * w.norm()) q += sylvester(r, true);
  return q;
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& w) { return LyapunovSolver(a).solve(w); }

double lyapunov_residual(const Matrix& a, const Matrix& s, const Matrix& w) {
  return (a * s + s * a.transpose() + w).norm();
}

double care_residual(const Matrix& a, const Matrix& b, const Matrix& u, const Matrix& v, const Matrix& q) {
  const Matrix g = b * v.llt().solve(b.transpose());
  return (a.transpose() * q + q * a - q * g * q + u).norm();
}

Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& u, const Matrix& v, const CareOptions& options) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n || u.rows() != n || u.cols() != n || v.rows() != b.cols() ||
      v.cols() != b.cols())
    throw InvalidArgument("care: dimension mismatch");
  Eigen::LLT<Matrix> vl(v);
  if (vl.info() != Eigen::Success) throw InvalidArgument("care: control weight must be positive definite");
  const Matrix g = b * vl.solve(b.transpose());

  Matrix h(2 * n, 2 * n);
  h << a, -g, -u, -a.transpose();
  const lapack::RealSchur rs = lapack::schur(h, lapack::SchurOrder::StableFirst);
  if (rs.selected != n)
    throw SynthesisError(SynthesisError::Kind::NotStabilisable,
                         "care: Hamiltonian has " + std::to_string(rs.selected) + " stable eigenvalues, expected " +
                             std::to_string(n));
  const Matrix u11 = rs.z.topLeftCorner(n, n);
  const Matrix u21 = rs.z.bottomLeftCorner(n, n);
  Eigen::PartialPivLU<Matrix> lu(u11.transpose());
  Matrix q = lu.solve(u21.transpose()).transpose();
  q = 0.5 * (q + q.transpose());
  if (!q.allFinite())
    throw SynthesisError(SynthesisError::Kind::NotStabilisable, "care: stable subspace is not a graph");

  // Newton refinement in correction form.
  const double target = options.tolerance * (u.norm() > 0.0 ? u.norm() : 1.0);
  for (int it = 0; it < options.refinement_steps; ++it) {
    const Matrix r = a.transpose() * q + q * a - q * g * q + u;
    if (r.norm() <= 0.01 * target) break;
    const Matrix ac = a - g * q;
    if (!is_hurwitz(ac)) break;
    const Matrix dq = LyapunovSolver(ac).solve_transposed(r);
    q += dq;
    q = 0.5 * (q + q.transpose());
  }
  if (!is_hurwitz(a - g * q))
    throw SynthesisError(SynthesisError::Kind::NotStabilisable, "care: solution is not stabilising");
  return q;
}

Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& u, const Matrix& v, const CareOptions& options) {
  const Matrix q = solve_care(a, b, u, v, options);
  return -v.llt().solve(b.transpose() * q);
}

double SofResiduals::max() const { return std::max({lyapunov_q, lyapunov_s, stationarity}); }

namespace {

struct SofProblem {
  const Matrix& a;
  const Matrix& b;
  const Matrix& c;
  const Matrix& u;
  const Matrix& v;
  Eigen::LLT<Matrix> vl;
  Matrix eye;
};

// Everything derived from one gain: closed loop, its Schur form and both
// Lyapunov solutions.
struct SofPoint {
  Matrix k;
  Matrix ac;
  Matrix q;
  Matrix s;
  Matrix grad;  // stationarity residual V K C S C^T + B^T Q S C^T
  double cost = 0.0;
  double residual = 0.0;
  double abscissa = 0.0;
  std::shared_ptr<const LyapunovSolver> solver;
};

// Evaluates `k` on the system shifted by -shift I. Returns false when the
// shifted closed loop is not Hurwitz.
bool evaluate(const SofProblem& p, const Matrix& k, double shift, double margin, SofPoint& out) {
  Matrix ac = p.a + p.b * k * p.c;
  if (shift != 0.0) ac.diagonal().array() -= shift;
  if (!ac.allFinite()) return false;
  try {
    auto solver = std::make_shared<const LyapunovSolver>(ac, margin);
    const Matrix kc = k * p.c;
    out.k = k;
    out.abscissa = solver->abscissa();
    out.q = solver->solve_transposed(p.u + kc.transpose() * p.v * kc);
    out.s = solver->solve(p.eye);
    out.ac = std::move(ac);
    out.cost = out.q.trace();
    out.grad = (p.v * kc + p.b.transpose() * out.q) * out.s * p.c.transpose();
    out.residual = out.grad.cwiseAbs().maxCoeff();
    out.solver = std::move(solver);
    return std::isfinite(out.cost);
  } catch (const StabilityError&) {
    return false;
  }
}

Matrix fixed_point_target(const SofProblem& p, const SofPoint& pt) {
  const Matrix css = p.c * pt.s * p.c.transpose();
  Eigen::LDLT<Matrix> ldlt(css);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
    throw SynthesisError(SynthesisError::Kind::SingularObservation, "sof: C S C^T is singular");
  const Matrix rhs = p.vl.solve(p.b.transpose() * pt.q * pt.s * p.c.transpose());
  return -ldlt.solve(rhs.transpose()).transpose();
}

enum class Sweep { Converged, Stable, Slow, Collapsed, Exhausted };

struct SweepLimits {
  double tolerance = 0.0;
  int max_sweeps = 0;
  int slow_window = 20;  ///< sweeps allowed without halving the residual
  /// Stop as soon as the unshifted closed-loop abscissa drops below this.
  double stable_below = -std::numeric_limits<double>::infinity();
};

// Damped fixed-point sweeps K <- K + gamma (K* - K) with gamma halved until the
// shifted loop stays Hurwitz and the cost does not increase.
Sweep fixed_point(const SofProblem& p, SofPoint& pt, double shift, const SweepLimits& lim, double gamma_floor,
                  double margin, int& sweeps) {
  double best = pt.residual;
  int since_best = 0;
  for (int done = 0;; ++done) {
    if (pt.residual < lim.tolerance) return Sweep::Converged;
    if (pt.abscissa + shift < lim.stable_below) return Sweep::Stable;
    if (done >= lim.max_sweeps) return Sweep::Exhausted;
    const Matrix target = fixed_point_target(p, pt);
    double gamma = 1.0;
    SofPoint trial;
    bool accepted = false;
    while (gamma >= gamma_floor) {
      const Matrix k = pt.k + gamma * (target - pt.k);
      if (evaluate(p, k, shift, margin, trial) && trial.cost <= pt.cost * (1.0 + 1e-12)) {
        accepted = true;
        break;
      }
      gamma *= 0.5;
    }
    if (!accepted) return Sweep::Collapsed;
    pt = std::move(trial);
    ++sweeps;
    if (pt.residual < 0.5 * best) {
      best = pt.residual;
      since_best = 0;
    } else if (++since_best >= lim.slow_window) {
      return Sweep::Slow;
    }
  }
}

// Jacobian of the stationarity residual with respect to the gain entries,
// column-major over (row i, column j) of K.
Matrix stationarity_jacobian(const SofProblem& p, const SofPoint& pt, const LyapunovSolver& solver) {
  const Eigen::Index m = pt.k.rows(), np = pt.k.cols();
  Matrix jac(m * np, m * np);
  const Matrix kc = pt.k * p.c;
  const Matrix ct = p.c.transpose();
  for (Eigen::Index j = 0; j < np; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      Matrix e = Matrix::Zero(m, np);
      e(i, j) = 1.0;
      const Matrix ec = e * p.c;
      const Matrix delta = p.b * ec;
      const Matrix ds = solver.solve(delta * pt.s + pt.s * delta.transpose());
      const Matrix cross = ec.transpose() * p.v * kc;
      const Matrix dq = solver.solve_transposed(delta.transpose() * pt.q + pt.q * delta + cross + cross.transpose());
      const Matrix dg = p.v * ec * pt.s * ct + p.v * kc * ds * ct + p.b.transpose() * dq * pt.s * ct +
                        p.b.transpose() * pt.q * ds * ct;
      jac.col(j * m + i) = Eigen::Map<const Vector>(dg.data(), dg.size());
    }
  }
  return jac;
}

}  // namespace

SofResiduals sof_residuals(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& u, const Matrix& v,
                           const Matrix& k, const Matrix& q, const Matrix& s) {
  const Matrix ac = a + b * k * c;
  const Matrix kc = k * c;
  SofResiduals r;
  r.lyapunov_q = (ac.transpose() * q + q * ac + u + kc.transpose() * v * kc).cwiseAbs().maxCoeff();
  r.lyapunov_s = (ac * s + s * ac.transpose() + Matrix::Identity(a.rows(), a.rows())).cwiseAbs().maxCoeff();
  r.stationarity = ((v * kc + b.transpose() * q) * s * c.transpose()).cwiseAbs().maxCoeff();
  return r;
}

double sof_cost(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& u, const Matrix& v,
                const Matrix& k) {
  const Matrix ac = a + b * k * c;
  const Matrix kc = k * c;
  return LyapunovSolver(ac).solve_transposed(u + kc.transpose() * v * kc).trace();
}

Matrix sof_stationarity(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& u, const Matrix& v,
                        const Matrix& k) {
  const Matrix ac = a + b * k * c;
  const Matrix kc = k * c;
  const LyapunovSolver solver(ac);
  const Matrix q = solver.solve_transposed(u + kc.transpose() * v * kc);
  const Matrix s = solver.solve(Matrix::Identity(a.rows(), a.rows()));
  return (v * kc + b.transpose() * q) * s * c.transpose();
}

SofSolution solve_sof(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& u, const Matrix& v,
                      const std::optional<Matrix>& k0, const SofOptions& options) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n || c.cols() != n || u.rows() != n || u.cols() != n ||
      v.rows() != b.cols() || v.cols() != b.cols())
    throw InvalidArgument("sof: dimension mismatch");
  SofProblem p{a, b, c, u, v, Eigen::LLT<Matrix>(v), Matrix::Identity(n, n)};
  if (p.vl.info() != Eigen::Success) throw InvalidArgument("sof: control weight must be positive definite");
  {
    Eigen::FullPivLU<Matrix> lu(c * c.transpose());
    if (c.rows() > n || !lu.isInvertible())
      throw SynthesisError(SynthesisError::Kind::SingularObservation, "sof: observation matrix is rank deficient");
  }

  SofSolution out;
  SofPoint pt;
  int iterations = 0;

  if (k0) {
    if (k0->rows() != b.cols() || k0->cols() != c.rows()) throw InvalidArgument("sof: initial gain has wrong shape");
    if (!evaluate(p, *k0, 0.0, options.margin, pt))
      throw SynthesisError(SynthesisError::Kind::FailToStart, "sof: initial gain does not stabilise the plant");
    out.initialisation = "given";
  } else {
    Matrix k_lqr;
    try {
      k_lqr = lqr_gain(a, b, u, v);
    } catch (const SynthesisError& e) {
      throw SynthesisError(SynthesisError::Kind::FailToStart, std::string("sof: ") + e.what());
    }
    const Matrix kp = k_lqr * c.transpose() * (c * c.transpose()).inverse();
    if (evaluate(p, kp, 0.0, options.margin, pt)) {
      out.initialisation = "lqr_projection";
    } else {
      // Continuation: optimise on a - shift I, lowering the shift towards the
      // achieved abscissa until the unshifted loop is stable.
      Matrix k = kp;
      double abscissa = spectral_abscissa(a + b * k * c);
      double shift = abscissa + 0.05 * std::max(1.0, std::abs(abscissa));
      bool started = false;
      // Successive stage abscissae typically approach a limit geometrically;
      // when the extrapolated limit stays positive the start is hopeless.
      std::vector<double> history;
      int hopeless = 0;
      SweepLimits lim;
      lim.tolerance = 1e-6;
      lim.max_sweeps = options.continuation_sweeps;
      lim.stable_below = -std::max(options.margin, 1e-6);
      for (int stage = 0; stage < options.continuation_stages; ++stage) {
        ++out.continuation_stages;
        SofPoint shifted;
        if (!evaluate(p, k, shift, options.margin, shifted))
          throw SynthesisError(SynthesisError::Kind::FailToStart, "sof: continuation lost stability");
        fixed_point(p, shifted, shift, lim, options.gamma_floor, options.margin, iterations);
        k = shifted.k;
        abscissa = shifted.abscissa + shift;
        if (abscissa < -options.margin && evaluate(p, k, 0.0, options.margin, pt)) {
          started = true;
          break;
        }
        history.push_back(abscissa);
        if (history.size() >= 3) {
          const double d1 = history[history.size() - 3] - history[history.size() - 2];
          const double d2 = history[history.size() - 2] - abscissa;
          const double r = d1 > 0.0 ? d2 / d1 : 1.0;
          const bool stalled = d2 <= 0.0 || (r < 1.0 && abscissa - d2 * r / (1.0 - r) > 0.0);
          hopeless = stalled ? hopeless + 1 : 0;
          if (hopeless >= 3) break;
        }
        const double next = std::max(abscissa + 0.5 * (shift - abscissa), abscissa + 1e-4);
        if (next >= shift - 1e-12) break;
        shift = next;
      }
      if (!started)
        throw SynthesisError(SynthesisError::Kind::FailToStart,
                             "sof: no stabilising output gain found by continuation (abscissa " +
                                 std::to_string(abscissa) + ")");
      out.initialisation = "shift_continuation";
    }
  }

  // Alternate damped fixed-point sweeps, which reliably decrease the cost
  // from far away, with Newton steps on the stationarity condition, which
  // finish quadratically once close.
  SweepLimits lim;
  lim.tolerance = options.tolerance;
  lim.slow_window = 5;
  const int start = iterations;
  while (pt.residual >= options.tolerance && iterations < options.max_iterations) {
    lim.max_sweeps = options.max_iterations - iterations;
    const Sweep sweep = fixed_point(p, pt, 0.0, lim, options.gamma_floor, options.margin, out.fixed_point_iterations);
    iterations = start + out.fixed_point_iterations + out.newton_iterations;
    if (sweep == Sweep::Converged || sweep == Sweep::Exhausted) break;

    int accepted_steps = 0;
    while (pt.residual >= options.tolerance && iterations < options.max_iterations) {
      const Matrix jac = stationarity_jacobian(p, pt, *pt.solver);
      const Vector g = Eigen::Map<const Vector>(pt.grad.data(), pt.grad.size());
      const Vector step = -jac.fullPivLu().solve(g);
      if (!step.allFinite()) break;
      const Matrix dk = Eigen::Map<const Matrix>(step.data(), pt.k.rows(), pt.k.cols());
      double gamma = 1.0;
      SofPoint trial;
      bool accepted = false;
      while (gamma >= 1e-3) {
        if (evaluate(p, pt.k + gamma * dk, 0.0, options.margin, trial) && trial.residual < 0.9 * pt.residual) {
          accepted = true;
          break;
        }
        gamma *= 0.5;
      }
      ++iterations;
      ++out.newton_iterations;
      if (!accepted) break;
      pt = std::move(trial);
      ++accepted_steps;
    }
    if (accepted_steps == 0) {
      if (sweep == Sweep::Collapsed) break;
      // Too far out for Newton; give the sweeps a longer run next time.
      lim.slow_window *= 2;
    }
  }

  if (pt.residual >= options.tolerance)
    throw SynthesisError(SynthesisError::Kind::FailToConverge,
                         "sof: stationarity residual " + std::to_string(pt.residual) + " after " +
                             std::to_string(iterations) + " iterations");

  out.k = pt.k;
  out.q = pt.q;
  out.s = pt.s;
  out.iterations = iterations;
  out.residual = sof_residuals(a, b, c, u, v, pt.k, pt.q, pt.s).max();
  out.closed_loop_abscissa = pt.abscissa;
  out.converged = out.residual < options.tolerance && pt.abscissa < -options.margin;
  if (!out.converged)
    throw SynthesisError(SynthesisError::Kind::FailToConverge,
                         "sof: optimality residual " + std::to_string(out.residual));
  return out;
}

}  // namespace filmctl
