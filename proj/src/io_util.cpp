#include "gpsep/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gpsep/common.hpp"

namespace gpsep::io {

namespace {

std::vector<double> parse_row(const std::string& line, bool* ok) {
  std::vector<double> row;
  *ok = true;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      row.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      *ok = false;
      return row;
    }
  }
  return row;
}

}  // namespace

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header_allowed = true;  // one leading non-numeric row is a header
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    bool ok = false;
    auto row = parse_row(line, &ok);
    if (!ok) {
      if (header_allowed && rows.empty()) {
        header_allowed = false;
        continue;
      }
      throw InputError("read_csv: non-numeric row in '" + path + "'");
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError("ragged rows in '" + path + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("no numeric rows in '" + path + "'");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      m(static_cast<long>(i), static_cast<long>(j)) = rows[i][j];
  return m;
}

Eigen::VectorXd read_csv_vector(const std::string& path) {
  const Eigen::MatrixXd m = read_csv_matrix(path);
  if (m.cols() != 1)
    throw InputError("'" + path + "' should contain a single column");
  return m.col(0);
}

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& comment_lines,
                      const std::string& header) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open output file '" + path + "'");
  out.precision(17);
  for (const auto& c : comment_lines) out << "# " << c << "\n";
  if (!header.empty()) out << header << "\n";
  for (long i = 0; i < m.rows(); ++i) {
    for (long j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ",";
      out << m(i, j);
    }
    out << "\n";
  }
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : text) {
    hash ^= static_cast<std::uint64_t>(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string fnv1a_hex(const std::string& text) {
  std::ostringstream out;
  out << std::hex << fnv1a(text);
  return out.str();
}

Eigen::MatrixXd kernel_density(const Eigen::VectorXd& draws, int points) {
  if (draws.size() < 2) throw InputError("kernel_density: need at least 2 draws");
  if (points < 8) throw InputError("kernel_density: need at least 8 grid points");
  const long m = draws.size();
  const double mean = draws.mean();
  const double sd = std::sqrt((draws.array() - mean).square().sum() /
                              static_cast<double>(m - 1));

  Eigen::VectorXd sorted = draws;
  std::sort(sorted.data(), sorted.data() + m);
  const auto quantile = [&](double p) {
    const double h = p * static_cast<double>(m - 1);
    const long lo = static_cast<long>(std::floor(h));
    const long hi = std::min<long>(lo + 1, m - 1);
    return sorted(lo) + (h - static_cast<double>(lo)) * (sorted(hi) - sorted(lo));
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = std::max(sd, 1e-12);
  const double bandwidth = 0.9 * spread * std::pow(static_cast<double>(m), -0.2);

  const double lo = sorted(0) - 3.0 * bandwidth;
  const double hi = sorted(m - 1) + 3.0 * bandwidth;
  Eigen::MatrixXd out(points, 2);
  const double inv_norm = 1.0 / (static_cast<double>(m) * bandwidth *
                                 std::sqrt(2.0 * 3.14159265358979323846));
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    const double z = ((draws.array() - x) / bandwidth).square().unaryExpr([](double v) {
                        return std::exp(-0.5 * v);
                      }).sum();
    out(i, 0) = x;
    out(i, 1) = inv_norm * z;
  }
  return out;
}

}  // namespace gpsep::io
