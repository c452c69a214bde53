#include "gpsep/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "gpsep/common.hpp"
#include "gpsep/io_util.hpp"

namespace gpsep::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& value, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InputError("field '" + field + "': cannot parse number '" + value + "'");
  }
}

long parse_long(const std::string& value, const std::string& field) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InputError("field '" + field + "': cannot parse integer '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& value, const std::string& field) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw InputError("field '" + field + "': cannot parse seed '" + value + "'");
  }
}

bool parse_bool(const std::string& value, const std::string& field) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw InputError("field '" + field + "': expected true/false, got '" + value + "'");
}

std::pair<double, double> parse_range(const std::string& value, const std::string& field) {
  const auto colon = value.find(':');
  if (colon == std::string::npos)
    throw InputError("field '" + field + "': expected lo:hi, got '" + value + "'");
  return {parse_double(trim(value.substr(0, colon)), field),
          parse_double(trim(value.substr(colon + 1)), field)};
}

std::tuple<double, double, int> parse_axis(const std::string& value,
                                           const std::string& field) {
  const auto c1 = value.find(':');
  const auto c2 = value.find(':', c1 == std::string::npos ? 0 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw InputError("field '" + field + "': expected lo:hi:count, got '" + value + "'");
  const double lo = parse_double(trim(value.substr(0, c1)), field);
  const double hi = parse_double(trim(value.substr(c1 + 1, c2 - c1 - 1)), field);
  const long count = parse_long(trim(value.substr(c2 + 1)), field);
  if (!(lo > 0.0 && hi > lo) || count < 2)
    throw InputError("field '" + field + "': need 0 < lo < hi and count >= 2");
  return {lo, hi, static_cast<int>(count)};
}

const std::set<std::string> kKnownKeys = {
    ".spec_version",
    "model.families", "model.roughness", "model.mean",
    "data.synthetic", "data.factor_files", "data.response_file",
    "data.locations_file", "data.factor_dims", "data.grid_sizes",
    "data.grid_ranges", "data.truth_sigma_sq", "data.truth_theta",
    "data.truth_xi", "data.truth_beta", "data.data_seed",
    "prior.kinds", "prior.eb_multiplier",
    "mcmc.iterations", "mcmc.burn_in", "mcmc.c", "mcmc.dof", "mcmc.seed",
    "mcmc.step2_literal",
    "study.replications", "study.gamma", "study.workers", "study.parameters",
    "study.master_seed",
    "prior_eval.xi_grid", "prior_eval.max_grid_points",
};

void validate(const RunConfig& cfg) {
  if (cfg.spec_version != 1)
    throw InputError("field 'spec_version': unsupported value; this build reads version 1");
  if (cfg.families.empty())
    throw InputError("field 'model.families': at least one factor is required");
  if (cfg.families.size() != cfg.roughness.size())
    throw InputError("fields 'model.families' and 'model.roughness' must have equal length");
  for (std::size_t k = 0; k < cfg.families.size(); ++k) {
    // construction validates the family name and the roughness domain
    corr::CorrelationFamily fam(corr::family_from_name(cfg.families[k]), cfg.roughness[k]);
    (void)fam;
  }
  coverage::mean_from_name(cfg.mean);
  for (const auto& kind : cfg.prior_kinds) priors::prior_from_name(kind);
  if (!(cfg.eb_multiplier > 0.0))
    throw InputError("field 'prior.eb_multiplier': must be positive");
  if (cfg.synthetic) {
    if (cfg.grid_sizes.size() != cfg.families.size())
      throw InputError("field 'data.grid_sizes': one entry per factor is required");
    for (int nk : cfg.grid_sizes)
      if (nk < 2)
        throw InputError("field 'data.grid_sizes': every factor needs at least 2 points, got " +
                         std::to_string(nk));
    if (cfg.grid_ranges.size() != cfg.grid_sizes.size())
      throw InputError("field 'data.grid_ranges': one lo:hi per factor is required");
    if (!(cfg.truth_sigma_sq > 0.0))
      throw InputError("field 'data.truth_sigma_sq': must be positive");
    if (!cfg.truth_xi.empty() && !cfg.truth_beta.empty())
      throw InputError("fields 'data.truth_xi' and 'data.truth_beta' are mutually exclusive");
    const auto& scale = cfg.truth_beta.empty() ? cfg.truth_xi : cfg.truth_beta;
    if (scale.size() != cfg.families.size())
      throw InputError("field 'data.truth_xi'/'data.truth_beta': one entry per factor");
    for (double v : scale)
      if (!(v > 0.0))
        throw InputError("field 'data.truth_xi'/'data.truth_beta': entries must be positive");
  } else if (!cfg.factor_files.empty()) {
    if (cfg.factor_files.size() != cfg.families.size())
      throw InputError("field 'data.factor_files': one file per factor is required");
    if (cfg.response_file.empty())
      throw InputError("field 'data.response_file': required with factor files");
  } else if (!cfg.locations_file.empty()) {
    if (cfg.response_file.empty())
      throw InputError("field 'data.response_file': required with a locations file");
    if (cfg.factor_dims.size() != cfg.families.size())
      throw InputError("field 'data.factor_dims': one width per factor is required");
  } else {
    throw InputError("section [data]: provide a synthetic spec, factor_files or locations_file");
  }
  if (cfg.iterations <= 0) throw InputError("field 'mcmc.iterations': must be positive");
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.iterations)
    throw InputError("field 'mcmc.burn_in': must lie in [0, iterations)");
  if (cfg.c < 0.0) throw InputError("field 'mcmc.c': must be nonnegative");
  if (cfg.dof < 1) throw InputError("field 'mcmc.dof': must be >= 1");
  if (cfg.replications < 1) throw InputError("field 'study.replications': must be >= 1");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
    throw InputError("field 'study.gamma': must lie in (0, 1)");
  if (cfg.max_grid_points < 1)
    throw InputError("field 'prior_eval.max_grid_points': must be positive");
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  cfg.truth_xi = {2.0, 2.0};  // default truth, overwritten by truth_beta if given
  bool truth_scale_given = false;

  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw InputError("config line " + std::to_string(line_no) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qualified = section + "." + key;
    if (kKnownKeys.find(qualified) == kKnownKeys.end())
      throw InputError("unknown config key '" + qualified + "'");

    if (qualified == ".spec_version") {
      cfg.spec_version = static_cast<int>(parse_long(value, qualified));
    } else if (qualified == "model.families") {
      cfg.families = split_list(value);
    } else if (qualified == "model.roughness") {
      cfg.roughness.clear();
      for (const auto& v : split_list(value)) cfg.roughness.push_back(parse_double(v, qualified));
    } else if (qualified == "model.mean") {
      cfg.mean = value;
    } else if (qualified == "data.synthetic") {
      cfg.synthetic = parse_bool(value, qualified);
    } else if (qualified == "data.factor_files") {
      cfg.factor_files = split_list(value);
      cfg.synthetic = false;
    } else if (qualified == "data.response_file") {
      cfg.response_file = value;
    } else if (qualified == "data.locations_file") {
      cfg.locations_file = value;
      cfg.synthetic = false;
    } else if (qualified == "data.factor_dims") {
      cfg.factor_dims.clear();
      for (const auto& v : split_list(value))
        cfg.factor_dims.push_back(static_cast<int>(parse_long(v, qualified)));
    } else if (qualified == "data.grid_sizes") {
      cfg.grid_sizes.clear();
      for (const auto& v : split_list(value))
        cfg.grid_sizes.push_back(static_cast<int>(parse_long(v, qualified)));
    } else if (qualified == "data.grid_ranges") {
      cfg.grid_ranges.clear();
      for (const auto& v : split_list(value))
        cfg.grid_ranges.push_back(parse_range(v, qualified));
    } else if (qualified == "data.truth_sigma_sq") {
      cfg.truth_sigma_sq = parse_double(value, qualified);
    } else if (qualified == "data.truth_theta") {
      cfg.truth_theta = parse_double(value, qualified);
    } else if (qualified == "data.truth_xi") {
      cfg.truth_xi.clear();
      for (const auto& v : split_list(value)) cfg.truth_xi.push_back(parse_double(v, qualified));
      cfg.truth_beta.clear();
      truth_scale_given = true;
    } else if (qualified == "data.truth_beta") {
      if (truth_scale_given && !cfg.truth_xi.empty())
        throw InputError("fields 'data.truth_xi' and 'data.truth_beta' are mutually exclusive");
      cfg.truth_beta.clear();
      for (const auto& v : split_list(value)) cfg.truth_beta.push_back(parse_double(v, qualified));
      cfg.truth_xi.clear();
      truth_scale_given = true;
    } else if (qualified == "data.data_seed") {
      cfg.data_seed = parse_u64(value, qualified);
    } else if (qualified == "prior.kinds") {
      cfg.prior_kinds = split_list(value);
    } else if (qualified == "prior.eb_multiplier") {
      cfg.eb_multiplier = parse_double(value, qualified);
    } else if (qualified == "mcmc.iterations") {
      cfg.iterations = parse_long(value, qualified);
    } else if (qualified == "mcmc.burn_in") {
      cfg.burn_in = parse_long(value, qualified);
    } else if (qualified == "mcmc.c") {
      cfg.c = parse_double(value, qualified);
    } else if (qualified == "mcmc.dof") {
      cfg.dof = static_cast<int>(parse_long(value, qualified));
    } else if (qualified == "mcmc.seed") {
      cfg.seed = parse_u64(value, qualified);
    } else if (qualified == "mcmc.step2_literal") {
      cfg.step2_literal = parse_bool(value, qualified);
    } else if (qualified == "study.replications") {
      cfg.replications = static_cast<int>(parse_long(value, qualified));
    } else if (qualified == "study.gamma") {
      cfg.gamma = parse_double(value, qualified);
    } else if (qualified == "study.workers") {
      cfg.workers = static_cast<int>(parse_long(value, qualified));
    } else if (qualified == "study.parameters") {
      cfg.parameters = split_list(value);
    } else if (qualified == "study.master_seed") {
      cfg.master_seed = parse_u64(value, qualified);
    } else if (qualified == "prior_eval.xi_grid") {
      cfg.xi_grid.clear();
      for (const auto& v : split_list(value)) cfg.xi_grid.push_back(parse_axis(v, qualified));
    } else if (qualified == "prior_eval.max_grid_points") {
      cfg.max_grid_points = parse_long(value, qualified);
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

namespace {

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ", ";
    out << values[i];
  }
  return out.str();
}

std::string join_ranges(const std::vector<std::pair<double, double>>& values) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ", ";
    out << values[i].first << ":" << values[i].second;
  }
  return out.str();
}

std::string join_axes(const std::vector<std::tuple<double, double, int>>& values) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ", ";
    out << std::get<0>(values[i]) << ":" << std::get<1>(values[i]) << ":"
        << std::get<2>(values[i]);
  }
  return out.str();
}

}  // namespace

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "spec_version = " << cfg.spec_version << "\n\n";
  out << "[model]\n";
  out << "families = " << join(cfg.families) << "\n";
  out << "roughness = " << join(cfg.roughness) << "\n";
  out << "mean = " << cfg.mean << "\n\n";
  out << "[data]\n";
  out << "synthetic = " << (cfg.synthetic ? "true" : "false") << "\n";
  if (!cfg.factor_files.empty()) out << "factor_files = " << join(cfg.factor_files) << "\n";
  if (!cfg.response_file.empty()) out << "response_file = " << cfg.response_file << "\n";
  if (!cfg.locations_file.empty()) out << "locations_file = " << cfg.locations_file << "\n";
  if (!cfg.factor_dims.empty()) out << "factor_dims = " << join(cfg.factor_dims) << "\n";
  if (cfg.synthetic) {
    out << "grid_sizes = " << join(cfg.grid_sizes) << "\n";
    out << "grid_ranges = " << join_ranges(cfg.grid_ranges) << "\n";
    out << "truth_sigma_sq = " << cfg.truth_sigma_sq << "\n";
    out << "truth_theta = " << cfg.truth_theta << "\n";
    if (!cfg.truth_beta.empty())
      out << "truth_beta = " << join(cfg.truth_beta) << "\n";
    else
      out << "truth_xi = " << join(cfg.truth_xi) << "\n";
    out << "data_seed = " << cfg.data_seed << "\n";
  }
  out << "\n[prior]\n";
  out << "kinds = " << join(cfg.prior_kinds) << "\n";
  out << "eb_multiplier = " << cfg.eb_multiplier << "\n\n";
  out << "[mcmc]\n";
  out << "iterations = " << cfg.iterations << "\n";
  out << "burn_in = " << cfg.burn_in << "\n";
  out << "c = " << cfg.c << "\n";
  out << "dof = " << cfg.dof << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "step2_literal = " << (cfg.step2_literal ? "true" : "false") << "\n\n";
  out << "[study]\n";
  out << "replications = " << cfg.replications << "\n";
  out << "gamma = " << cfg.gamma << "\n";
  out << "workers = " << cfg.workers << "\n";
  out << "parameters = " << join(cfg.parameters) << "\n";
  out << "master_seed = " << cfg.master_seed << "\n";
  if (!cfg.xi_grid.empty()) {
    out << "\n[prior_eval]\n";
    out << "xi_grid = " << join_axes(cfg.xi_grid) << "\n";
    out << "max_grid_points = " << cfg.max_grid_points << "\n";
  }
  return out.str();
}

std::string config_hash(const RunConfig& cfg) {
  return io::fnv1a_hex(serialize_config(cfg));
}

std::vector<corr::CorrelationFamily> build_families(const RunConfig& cfg) {
  std::vector<corr::CorrelationFamily> families;
  families.reserve(cfg.families.size());
  for (std::size_t k = 0; k < cfg.families.size(); ++k)
    families.emplace_back(corr::family_from_name(cfg.families[k]), cfg.roughness[k]);
  return families;
}

Eigen::VectorXd true_xi(const RunConfig& cfg) {
  if (!cfg.truth_beta.empty()) {
    Eigen::VectorXd beta(static_cast<long>(cfg.truth_beta.size()));
    for (std::size_t k = 0; k < cfg.truth_beta.size(); ++k)
      beta(static_cast<long>(k)) = cfg.truth_beta[k];
    return coverage::beta_to_xi(beta, cfg.roughness);
  }
  Eigen::VectorXd xi(static_cast<long>(cfg.truth_xi.size()));
  for (std::size_t k = 0; k < cfg.truth_xi.size(); ++k)
    xi(static_cast<long>(k)) = cfg.truth_xi[k];
  return xi;
}

GpDataset build_dataset(const RunConfig& cfg) {
  const auto families = build_families(cfg);
  const auto mean = coverage::mean_from_name(cfg.mean);

  if (cfg.synthetic) {
    coverage::GridSpec spec;
    spec.sizes = cfg.grid_sizes;
    spec.ranges = cfg.grid_ranges;
    const DesignGrid grid = spec.build();
    return coverage::simulate_gp(grid, families, coverage::make_mean_factors(grid, mean),
                                 cfg.truth_theta, cfg.truth_sigma_sq, true_xi(cfg),
                                 cfg.data_seed);
  }

  if (!cfg.factor_files.empty()) {
    std::vector<Eigen::MatrixXd> factors;
    factors.reserve(cfg.factor_files.size());
    for (const auto& file : cfg.factor_files) factors.push_back(io::read_csv_matrix(file));
    const DesignGrid grid = DesignGrid::cartesian(std::move(factors));
    const Eigen::VectorXd y = io::read_csv_vector(cfg.response_file);
    return GpDataset(y, grid, families, coverage::make_mean_factors(grid, mean));
  }

  // dense locations table
  const Eigen::MatrixXd loc = io::read_csv_matrix(cfg.locations_file);
  const DesignGrid grid = DesignGrid::dense(loc, cfg.factor_dims);
  const Eigen::VectorXd y = io::read_csv_vector(cfg.response_file);
  Eigen::MatrixXd x;
  switch (mean) {
    case coverage::MeanStructure::constant:
      x = Eigen::MatrixXd::Ones(loc.rows(), 1);
      break;
    case coverage::MeanStructure::x1_slope:
      x = loc.col(0);
      break;
    case coverage::MeanStructure::product:
      x = Eigen::MatrixXd::Ones(loc.rows(), 1);
      for (long j = 0; j < loc.cols(); ++j) x.col(0) = x.col(0).cwiseProduct(loc.col(j));
      break;
  }
  return GpDataset(y, grid, families, x);
}

coverage::StudyConfig build_study(const RunConfig& cfg) {
  if (!cfg.synthetic)
    throw InputError("the coverage study requires a synthetic data block (the truth)");
  coverage::StudyConfig study;
  for (const auto& name : cfg.families)
    if (name != "power_exponential")
      throw InputError("field 'model.families': the study truth uses the decay-scale "
                       "parameterization, which requires power_exponential factors");
  study.truth.sigma_sq = cfg.truth_sigma_sq;
  study.truth.theta = cfg.truth_theta;
  study.truth.alpha = cfg.roughness;
  study.truth.mean = coverage::mean_from_name(cfg.mean);
  if (!cfg.truth_beta.empty()) {
    study.truth.beta.resize(static_cast<long>(cfg.truth_beta.size()));
    for (std::size_t k = 0; k < cfg.truth_beta.size(); ++k)
      study.truth.beta(static_cast<long>(k)) = cfg.truth_beta[k];
  } else {
    study.truth.beta.resize(static_cast<long>(cfg.truth_xi.size()));
    for (std::size_t k = 0; k < cfg.truth_xi.size(); ++k)
      study.truth.beta(static_cast<long>(k)) =
          std::pow(cfg.truth_xi[k], cfg.roughness[k]);  // beta = xi^alpha
  }
  study.design.sizes = cfg.grid_sizes;
  study.design.ranges = cfg.grid_ranges;
  study.priors.clear();
  for (const auto& kind : cfg.prior_kinds)
    study.priors.push_back(priors::prior_from_name(kind));
  study.replications = cfg.replications;
  study.iterations = cfg.iterations;
  study.burn_in = cfg.burn_in;
  study.proposal_c = cfg.c;
  study.proposal_dof = cfg.dof;
  study.eb_multiplier = cfg.eb_multiplier;
  study.gamma = cfg.gamma;
  study.master_seed = cfg.master_seed;
  study.workers = cfg.workers;
  study.parameters = cfg.parameters;
  return study;
}

}  // namespace gpsep::cli
