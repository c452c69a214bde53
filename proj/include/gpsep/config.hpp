#ifndef GPSEP_CONFIG_HPP
#define GPSEP_CONFIG_HPP

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "gpsep/coverage.hpp"
#include "gpsep/model.hpp"

namespace gpsep::cli {

// Parsed run configuration: flat sectioned key-value text, schema-validated,
// unknown keys rejected, every default materialized. The serialized form of a
// parsed config (see serialize_config) is canonical; its hash is embedded in
// every output file.
struct RunConfig {
  int spec_version = 1;

  // [model]
  std::vector<std::string> families{"power_exponential", "power_exponential"};
  std::vector<double> roughness{2.0, 2.0};
  std::string mean = "constant";  // constant | x1_slope | product

  // [data] - exactly one of: synthetic spec, factor files, dense locations
  bool synthetic = true;
  std::vector<std::string> factor_files;
  std::string response_file;
  std::string locations_file;
  std::vector<int> factor_dims;
  std::vector<int> grid_sizes{5, 5};
  std::vector<std::pair<double, double>> grid_ranges{{0.0, 1.0}, {0.0, 1.0}};
  double truth_sigma_sq = 1.0;
  double truth_theta = 1.0;
  std::vector<double> truth_xi;    // direct ranges; or
  std::vector<double> truth_beta;  // decay-rate scale, xi = beta^(1/roughness)
  std::uint64_t data_seed = 7;

  // [prior]
  std::vector<std::string> prior_kinds{"reference"};
  double eb_multiplier = 10.0;

  // [mcmc]
  long iterations = 10000;
  long burn_in = 500;
  double c = 0.0;  // 0 = default 2.4/sqrt(r)
  int dof = 3;
  std::uint64_t seed = 1;
  bool step2_literal = false;

  // [study]
  int replications = 300;
  double gamma = 0.05;
  int workers = 0;
  std::vector<std::string> parameters{"sigma_sq", "theta", "beta_1"};
  std::uint64_t master_seed = 20240901;

  // [prior_eval]
  std::vector<std::tuple<double, double, int>> xi_grid;  // lo:hi:count, log-spaced
  long max_grid_points = 100000;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
std::string serialize_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

// Materialize the dataset a config describes (synthetic draw or file load).
GpDataset build_dataset(const RunConfig& cfg);

std::vector<corr::CorrelationFamily> build_families(const RunConfig& cfg);
Eigen::VectorXd true_xi(const RunConfig& cfg);  // from truth_xi or truth_beta
coverage::StudyConfig build_study(const RunConfig& cfg);

}  // namespace gpsep::cli

#endif
