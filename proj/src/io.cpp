#include "filmctl/io.hpp"

#include "filmctl/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace filmctl {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int DataTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InvalidArgument("table has no column '" + name + "'");
  return static_cast<int>(it - columns.begin());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DataTable read_table(const std::string& path) {
  std::istringstream in(read_text(path));
  DataTable t;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = line.substr(line.find_first_not_of("# ") == std::string::npos
                                               ? line.size()
                                               : line.find_first_not_of("# "));
      if (body.rfind("columns:", 0) == 0) {
        std::istringstream cs(body.substr(8));
        std::string c;
        while (cs >> c) t.columns.push_back(c);
      } else if (const auto eq = body.find(" = "); eq != std::string::npos) {
        t.meta[body.substr(0, eq)] = body.substr(eq + 3);
      }
      continue;
    }
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        // stod rejects "nan"/"inf" spellings on some platforms; accept them.
        if (tok == "nan" || tok == "-nan") row.push_back(std::numeric_limits<double>::quiet_NaN());
        else if (tok == "inf") row.push_back(std::numeric_limits<double>::infinity());
        else if (tok == "-inf") row.push_back(-std::numeric_limits<double>::infinity());
        else throw InvalidArgument(path + ":" + std::to_string(number) + ": bad number '" + tok + "'");
      }
    }
    if (!t.columns.empty() && row.size() != t.columns.size())
      throw InvalidArgument(path + ":" + std::to_string(number) + ": expected " + std::to_string(t.columns.size()) +
                            " columns, found " + std::to_string(row.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_trajectory(const std::string& path, const TrajectoryRecord& rec, int actuators, const std::string& hash) {
  const bool est = !rec.est_err.empty();
  std::string out = "# filmctl trajectory\n# config_hash = " + hash + "\n# verdict = " + to_string(rec.verdict) +
                    "\n# epsilon = " + format_number(rec.epsilon) + "\n# columns: t norm cost";
  for (int i = 1; i <= actuators; ++i) out += " eta" + std::to_string(i);
  if (est) out += " est_err";
  out += "\n";
  for (std::size_t k = 0; k < rec.t.size(); ++k) {
    out += format_number(rec.t[k]) + " " + format_number(rec.norm[k]) + " " + format_number(rec.cost[k]);
    for (int i = 0; i < actuators; ++i)
      out += " " + format_number(i < rec.eta[k].size() ? rec.eta[k][i] : 0.0);
    if (est) out += " " + format_number(rec.est_err[k]);
    out += "\n";
  }
  write_text(path, out);
}

void write_snapshot(const std::string& path, const Snapshot& snap, const std::string& hash) {
  std::string out = "# filmctl snapshot\n# config_hash = " + hash + "\n# t = " + format_number(snap.t) +
                    "\n# columns: x h f" + (snap.h_est ? " h_est" : "") + "\n";
  for (Eigen::Index j = 0; j < snap.x.size(); ++j) {
    out += format_number(snap.x[j]) + " " + format_number(snap.h[j]) + " " + format_number(snap.f[j]);
    if (snap.h_est) out += " " + format_number((*snap.h_est)[j]);
    out += "\n";
  }
  write_text(path, out);
}

void write_matrix(const std::string& path, const Matrix& m) {
  std::string out = "# " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += " ";
      out += format_number(m(i, j));
    }
    out += "\n";
  }
  write_text(path, out);
}

Matrix read_matrix(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string hash;
  Eigen::Index rows = -1, cols = -1;
  if (!(in >> hash >> rows >> cols) || hash != "#" || rows < 0 || cols < 0)
    throw InvalidArgument(path + ": missing '# rows cols' header");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::string tok;
      if (!(in >> tok)) throw InvalidArgument(path + ": truncated matrix");
      m(i, j) = std::stod(tok);
    }
  return m;
}

void write_spectrum(const std::string& path, const ComplexVector& values, const std::string& hash) {
  std::vector<std::complex<double>> v(values.data(), values.data() + values.size());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  std::string out = "# filmctl spectrum\n# config_hash = " + hash + "\n# columns: real imag\n";
  for (const auto& z : v) out += format_number(z.real()) + " " + format_number(z.imag()) + "\n";
  write_text(path, out);
}

void write_points(const std::string& path, const std::vector<SweepPoint>& points) {
  std::string out = "R M P\n";
  for (const SweepPoint& p : points)
    out += format_number(p[0]) + " " + format_number(p[1]) + " " + format_number(p[2]) + "\n";
  write_text(path, out);
}

std::vector<SweepPoint> read_points(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string header;
  std::getline(in, header);
  if (header != "R M P") throw InvalidArgument(path + ": expected header 'R M P'");
  std::vector<SweepPoint> out;
  SweepPoint p;
  while (in >> p[0] >> p[1] >> p[2]) out.push_back(p);
  if (!in.eof()) throw InvalidArgument(path + ": malformed point row");
  return out;
}

}  // namespace filmctl
