#include "filmctl/errors.hpp"
#include "filmctl/io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

using namespace filmctl;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "filmctl_test_io";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("matrices round-trip bit for bit") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Matrix m(7, 4);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng) * std::pow(10.0, static_cast<int>(i % 9) - 4);
  m(0, 0) = 1.0 / 3.0;
  m(1, 1) = -0.0;
  const std::string path = temp_path("m.dat");
  write_matrix(path, m);
  const Matrix back = read_matrix(path);
  REQUIRE(back.rows() == 7);
  REQUIRE(back.cols() == 4);
  CHECK((back.array() == m.array()).all());
}

TEST_CASE("trajectory tables carry columns and metadata") {
  TrajectoryRecord rec;
  rec.t = {-0.1, 0.0, 0.1};
  rec.norm = {0.1, 0.09, 0.08};
  rec.cost = {0.0, 0.0, 0.005};
  rec.eta = {Vector::Zero(2), Vector::Constant(2, 0.5), Vector::Constant(2, -0.25)};
  rec.est_err = {0.1, 0.05, 0.02};
  rec.verdict = Verdict::NotStabilised;
  rec.epsilon = 1e-3;
  const std::string path = temp_path("traj.dat");
  write_trajectory(path, rec, 2, "0123456789abcdef");
  const DataTable t = read_table(path);
  CHECK(t.columns == std::vector<std::string>{"t", "norm", "cost", "eta1", "eta2", "est_err"});
  CHECK(t.meta.at("config_hash") == "0123456789abcdef");
  CHECK(t.meta.at("verdict") == "not_stabilised");
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[2][t.column("eta2")] == -0.25);
  CHECK(t.rows[1][t.column("est_err")] == 0.05);
  CHECK(t.rows[0][t.column("t")] == -0.1);
  CHECK_THROWS_AS(t.column("missing"), InvalidArgument);
}

TEST_CASE("non-finite values survive a table round trip") {
  write_text(temp_path("nf.dat"), "# columns: a b c\nnan inf -inf\n");
  const DataTable t = read_table(temp_path("nf.dat"));
  REQUIRE(t.rows.size() == 1);
  CHECK(std::isnan(t.rows[0][0]));
  CHECK(t.rows[0][1] == std::numeric_limits<double>::infinity());
  CHECK(t.rows[0][2] == -std::numeric_limits<double>::infinity());
  write_text(temp_path("bad.dat"), "# columns: a b\n1 2 3\n");
  CHECK_THROWS_AS(read_table(temp_path("bad.dat")), InvalidArgument);
}

TEST_CASE("spectra are written by decreasing real part") {
  ComplexVector v(4);
  v << std::complex<double>(-1, 2), std::complex<double>(0.5, 0), std::complex<double>(-3, 0),
      std::complex<double>(0.1, -1);
  const std::string path = temp_path("spec.dat");
  write_spectrum(path, v, "h");
  const DataTable t = read_table(path);
  REQUIRE(t.rows.size() == 4);
  for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i - 1][0] >= t.rows[i][0]);
  CHECK(t.rows[0][0] == 0.5);
  CHECK(t.rows[3][0] == -3.0);
}

TEST_CASE("sweep points round-trip") {
  const std::vector<SweepPoint> pts{{1.0, 3, 5}, {11.29, 5, 5}, {100.0, 11, 3}};
  const std::string path = temp_path("pts.dat");
  write_points(path, pts);
  CHECK(read_text(path).rfind("R M P\n", 0) == 0);
  CHECK(read_points(path) == pts);
  write_points(path, {});
  CHECK(read_points(path).empty());
  write_text(path, "Re M P\n1 2 3\n");
  CHECK_THROWS_AS(read_points(path), InvalidArgument);
}
