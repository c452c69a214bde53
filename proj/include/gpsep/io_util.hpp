#ifndef GPSEP_IO_UTIL_HPP
#define GPSEP_IO_UTIL_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gpsep::io {

// Plain numeric CSV (comma separated, no header; lines starting with '#' are
// metadata comments and are skipped).
Eigen::MatrixXd read_csv_matrix(const std::string& path);
Eigen::VectorXd read_csv_vector(const std::string& path);
void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& comment_lines = {},
                      const std::string& header = "");

std::uint64_t fnv1a(const std::string& text);
std::string fnv1a_hex(const std::string& text);

// Gaussian kernel density estimate on an equally spaced grid (Silverman
// bandwidth); columns of the result are (x, density).
Eigen::MatrixXd kernel_density(const Eigen::VectorXd& draws, int points = 256);

}  // namespace gpsep::io

#endif
