#pragma once

// Serialization: system configuration (JSON, schema "v1"), point-cloud CSV
// (one row per point, 17 significant digits) and the attractor report.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvxifs/system.hpp"

namespace cvxifs {

struct CoeffEntry {
  std::string i, j;
  double a = 0, b = 0, c = 0;
};

struct RunDefaults {
  double tol = 1e-6;
  double eps_decimate = 1e-6;
  long long max_iter = 200;
  std::uint64_t seed = 42;
};

struct SystemConfig {
  std::string version = "v1";
  int dim = 1;
  Eigen::VectorXd lo, hi;
  std::vector<std::string> ids;
  std::vector<MapDescriptor<double>> maps;
  std::vector<CoeffEntry> coefficients;
  RunDefaults defaults;
};

SystemConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SystemConfig& cfg);
SystemConfig load_config(const std::string& path);

// Instantiates the runtime system (validates the table and box invariance).
IFSSystem<double> build_system(const SystemConfig& cfg);

// Map id -> zero-based index; throws ParseError for unknown ids.
Index map_index(const SystemConfig& cfg, const std::string& id);

void write_cloud_csv(std::ostream& out, const PointCloud<double>& cloud);
void write_cloud_csv_file(const std::string& path, const PointCloud<double>& cloud);
PointCloud<double> read_cloud_csv(std::istream& in, const std::string& label = "<stream>");
PointCloud<double> read_cloud_csv_file(const std::string& path);

nlohmann::json attractor_report(const AttractorResult<double>& res, const std::string& cloud_file);
nlohmann::json beta_counterexample_json(const BetaCounterexample<double>& cex,
                                        const SystemConfig& cfg);

}  // namespace cvxifs
