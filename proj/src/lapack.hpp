// Thin LAPACKE bindings used by the dense solvers. Column-major Eigen storage
// is passed straight through.
#pragma once

#include "filmctl/core.hpp"

#include <complex>

namespace filmctl::lapack {

enum class SchurOrder { None, StableFirst };

struct RealSchur {
  Matrix t;  ///< quasi upper triangular
  Matrix z;  ///< orthogonal, input = z t z^T
  Eigen::VectorXcd values;
  int selected = 0;  ///< leading eigenvalues satisfying the ordering predicate
};

/// Real Schur form via dgees. With StableFirst the eigenvalues with negative
/// real part are moved to the leading block.
RealSchur schur(const Matrix& a, SchurOrder order = SchurOrder::None);

/// Eigenvalues via dgeev (with balancing).
Eigen::VectorXcd eigenvalues(const Matrix& a);

/// Solves op(ta) y + isgn * y op(tb) = scale * c for quasi-triangular ta, tb
/// (dtrsyl). `c` is overwritten with y; the returned value is `scale`.
double trsyl(char trans_a, char trans_b, int isgn, const Matrix& ta, const Matrix& tb, Matrix& c);

}  // namespace filmctl::lapack
