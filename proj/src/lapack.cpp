#include "lapack.hpp"

#include "filmctl/errors.hpp"

#include <lapacke.h>

#include <string>

namespace filmctl::lapack {
namespace {

lapack_logical stable_first(const double* wr, const double* /*wi*/) { return *wr < 0.0; }

}  // namespace

RealSchur schur(const Matrix& a, SchurOrder order) {
  if (a.rows() != a.cols()) throw InvalidArgument("schur: matrix must be square");
  const lapack_int n = static_cast<lapack_int>(a.rows());
  RealSchur out;
  out.t = a;
  out.z.resize(n, n);
  Eigen::VectorXd wr(n), wi(n);
  lapack_int sdim = 0;
  const char sort = order == SchurOrder::StableFirst ? 'S' : 'N';
  const lapack_int info =
      LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', sort, order == SchurOrder::StableFirst ? stable_first : nullptr,
                    n, out.t.data(), n, &sdim, wr.data(), wi.data(), out.z.data(), n);
  if (info < 0) throw Error("dgees: invalid argument " + std::to_string(-info));
  if (info > 0 && info <= n) throw Error("dgees: QR iteration failed to converge");
  // info == n+1 / n+2: reordering was ill-conditioned; the caller checks
  // residuals of whatever it derives from the factorisation.
  out.values.resize(n);
  for (lapack_int i = 0; i < n; ++i) out.values[i] = {wr[i], wi[i]};
  out.selected = sdim;
  return out;
}

Eigen::VectorXcd eigenvalues(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("eigenvalues: matrix must be square");
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::VectorXcd out(n);
  if (n == 0) return out;
  Matrix work = a;
  Eigen::VectorXd wr(n), wi(n);
  const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n, wr.data(), wi.data(),
                                        nullptr, 1, nullptr, 1);
  if (info != 0) throw Error("dgeev failed with info " + std::to_string(info));
  for (lapack_int i = 0; i < n; ++i) out[i] = {wr[i], wi[i]};
  return out;
}

double trsyl(char trans_a, char trans_b, int isgn, const Matrix& ta, const Matrix& tb, Matrix& c) {
  const lapack_int m = static_cast<lapack_int>(c.rows());
  const lapack_int n = static_cast<lapack_int>(c.cols());
  double scale = 1.0;
  const lapack_int info = LAPACKE_dtrsyl(LAPACK_COL_MAJOR, trans_a, trans_b, isgn, m, n, ta.data(), m,
                                         tb.data(), n, c.data(), m, &scale);
  if (info < 0) throw Error("dtrsyl: invalid argument " + std::to_string(-info));
  // info == 1 signals perturbed (near-common) eigenvalues; the solution is
  // still returned and residual checks downstream decide.
  return scale;
}

}  // namespace filmctl::lapack
