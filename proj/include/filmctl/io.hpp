#pragma once

#include "filmctl/core.hpp"
#include "filmctl/sim.hpp"
#include "filmctl/wrmodel.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace filmctl {

/// Whitespace-delimited numeric table with '#' header lines. A header line
/// "# columns: a b c" names the columns; "# key = value" lines are metadata.
struct DataTable {
  std::vector<std::string> columns;
  std::map<std::string, std::string> meta;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws InvalidArgument if absent.
  int column(const std::string& name) const;
};

DataTable read_table(const std::string& path);

/// Columns t, norm, cost, eta1..etaM and, for estimator runs, est_err.
void write_trajectory(const std::string& path, const TrajectoryRecord& rec, int actuators, const std::string& hash);

/// Columns x, h, f and, for estimator runs, h_est.
void write_snapshot(const std::string& path, const Snapshot& snap, const std::string& hash);

/// "# rows cols" followed by the rows, 17 significant digits.
void write_matrix(const std::string& path, const Matrix& m);
Matrix read_matrix(const std::string& path);

/// Eigenvalues as (real, imag) rows sorted by decreasing real part.
void write_spectrum(const std::string& path, const ComplexVector& values, const std::string& hash);

/// (Re, M, P) rows under the header "R M P".
using SweepPoint = std::array<double, 3>;
void write_points(const std::string& path, const std::vector<SweepPoint>& points);
std::vector<SweepPoint> read_points(const std::string& path);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// "%.17g": shortest form that round-trips every double.
std::string format_number(double v);

}  // namespace filmctl
