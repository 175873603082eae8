#include "cvxifs/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace cvxifs {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg, const std::string& where) {
  throw ParseError(msg, where);
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(std::string("missing field '") + key + "'", where);
  return j.at(key);
}

double need_number(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number()) fail(std::string("field '") + key + "' must be a number", where);
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(std::string("field '") + key + "' must be finite", where);
  return x;
}

Eigen::VectorXd need_vector(const json& j, const char* key, int dim, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_array() || static_cast<int>(v.size()) != dim)
    fail(std::string("field '") + key + "' must be an array of " + std::to_string(dim) + " numbers",
         where);
  Eigen::VectorXd out(dim);
  for (int c = 0; c < dim; ++c) {
    if (!v[static_cast<std::size_t>(c)].is_number())
      fail(std::string("field '") + key + "' must contain numbers", where);
    out(c) = v[static_cast<std::size_t>(c)].get<double>();
  }
  if (!out.allFinite()) fail(std::string("field '") + key + "' must be finite", where);
  return out;
}

MapDescriptor<double> map_from_json(const json& j, int dim, const std::string& where) {
  const json& type = need(j, "type", where);
  if (type == "affine") {
    const json& m = need(j, "matrix", where);
    if (!m.is_array() || static_cast<int>(m.size()) != dim)
      fail("affine 'matrix' must be a row-major " + std::to_string(dim) + "x" +
                   std::to_string(dim) + " array of rows",
               where);
    Eigen::MatrixXd a(dim, dim);
    for (int r = 0; r < dim; ++r) {
      const json& row = m[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<int>(row.size()) != dim)
        fail("affine 'matrix' rows must have " + std::to_string(dim) + " entries", where);
      for (int c = 0; c < dim; ++c) {
        if (!row[static_cast<std::size_t>(c)].is_number())
          fail("affine 'matrix' entries must be numbers", where);
        a(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
    }
    const Eigen::VectorXd b = need_vector(j, "offset", dim, where);
    return MapDescriptor<double>::affine(a, b);
  }
  if (type == "poly1d") {
    if (dim != 1) fail("poly1d maps are only valid when dim = 1", where);
    const json& coeffs = need(j, "coefficients", where);
    if (!coeffs.is_array() || coeffs.empty())
      fail("poly1d 'coefficients' must be a non-empty ascending array", where);
    std::vector<double> c;
    for (const auto& v : coeffs) {
      if (!v.is_number()) fail("poly1d 'coefficients' must be numbers", where);
      c.push_back(v.get<double>());
    }
    return MapDescriptor<double>::poly1d(std::move(c));
  }
  fail("map 'type' must be 'affine' or 'poly1d'", where);
}

json map_to_json(const MapDescriptor<double>& m) {
  json j;
  if (m.is_affine()) {
    const auto& a = std::get<AffineMap<double>>(m.node);
    j["type"] = "affine";
    json rows = json::array();
    for (Index r = 0; r < a.linear.rows(); ++r) {
      json row = json::array();
      for (Index c = 0; c < a.linear.cols(); ++c) row.push_back(a.linear(r, c));
      rows.push_back(std::move(row));
    }
    j["matrix"] = std::move(rows);
    json off = json::array();
    for (Index c = 0; c < a.offset.size(); ++c) off.push_back(a.offset(c));
    j["offset"] = std::move(off);
  } else if (m.is_poly1d()) {
    j["type"] = "poly1d";
    j["coefficients"] = std::get<Poly1DMap<double>>(m.node).coeffs;
  } else {
    throw ValidationError("composite maps have no configuration form");
  }
  return j;
}

}  // namespace

SystemConfig config_from_json(const json& j) {
  SystemConfig cfg;
  if (!j.is_object()) fail("configuration must be a JSON object", "$");
  const json& ver = need(j, "version", "$");
  if (ver != "v1") fail("unsupported configuration version (expected \"v1\")", "$.version");
  cfg.version = "v1";

  const double dim_raw = need_number(j, "dim", "$");
  cfg.dim = static_cast<int>(dim_raw);
  if (cfg.dim != dim_raw || cfg.dim < 1 || cfg.dim > 8)
    fail("dim must be an integer in [1, 8]", "$.dim");

  const json& box = need(j, "box", "$");
  cfg.lo = need_vector(box, "lo", cfg.dim, "$.box");
  cfg.hi = need_vector(box, "hi", cfg.dim, "$.box");

  const json& maps = need(j, "maps", "$");
  if (!maps.is_array() || maps.empty()) fail("'maps' must be a non-empty array", "$.maps");
  std::set<std::string> seen;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const std::string where = "$.maps[" + std::to_string(k) + "]";
    const json& entry = maps[k];
    const json& id = need(entry, "id", where);
    if (!id.is_string() || id.get<std::string>().empty())
      fail("map 'id' must be a non-empty string", where);
    if (!seen.insert(id.get<std::string>()).second)
      fail("duplicate map id '" + id.get<std::string>() + "'", where);
    cfg.ids.push_back(id.get<std::string>());
    try {
      cfg.maps.push_back(map_from_json(entry, cfg.dim, where));
    } catch (const ValidationError& e) {
      fail(e.what(), where);
    }
  }

  const json& coeffs = need(j, "coefficients", "$");
  if (!coeffs.is_array())
    fail("'coefficients' must be an array of {i, j, a, b, c}", "$.coefficients");
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    const std::string where = "$.coefficients[" + std::to_string(k) + "]";
    const json& entry = coeffs[k];
    CoeffEntry ce;
    const json& i = need(entry, "i", where);
    const json& jj = need(entry, "j", where);
    if (!i.is_string() || !jj.is_string()) fail("'i' and 'j' must be map ids", where);
    ce.i = i.get<std::string>();
    ce.j = jj.get<std::string>();
    if (seen.find(ce.i) == seen.end()) fail("unknown map id '" + ce.i + "'", where);
    if (seen.find(ce.j) == seen.end()) fail("unknown map id '" + ce.j + "'", where);
    ce.a = entry.contains("a") ? need_number(entry, "a", where) : 0.0;
    ce.b = entry.contains("b") ? need_number(entry, "b", where) : 0.0;
    ce.c = entry.contains("c") ? need_number(entry, "c", where) : 0.0;
    if (ce.a < 0 || ce.b < 0 || ce.c < 0) fail("coefficients must be non-negative", where);
    cfg.coefficients.push_back(std::move(ce));
  }

  // the single-map 1D case is a fixed-point computation; default tighter
  cfg.defaults.tol = (cfg.dim == 1 && cfg.maps.size() == 1) ? 1e-9 : 1e-6;
  if (j.contains("defaults")) {
    const json& d = j.at("defaults");
    if (!d.is_object()) fail("'defaults' must be an object", "$.defaults");
    if (d.contains("tol")) cfg.defaults.tol = need_number(d, "tol", "$.defaults");
    if (d.contains("eps_decimate"))
      cfg.defaults.eps_decimate = need_number(d, "eps_decimate", "$.defaults");
    if (d.contains("max_iter")) {
      const double m = need_number(d, "max_iter", "$.defaults");
      cfg.defaults.max_iter = static_cast<long long>(m);
      if (cfg.defaults.max_iter != m || cfg.defaults.max_iter < 1)
        fail("'max_iter' must be a positive integer", "$.defaults");
    }
    if (d.contains("seed")) {
      const double s = need_number(d, "seed", "$.defaults");
      if (s < 0 || s != std::floor(s)) fail("'seed' must be a non-negative integer", "$.defaults");
      cfg.defaults.seed = static_cast<std::uint64_t>(s);
    }
    if (!(cfg.defaults.tol > 0)) fail("'tol' must be positive", "$.defaults");
    if (!(cfg.defaults.eps_decimate >= 0)) fail("'eps_decimate' must be >= 0", "$.defaults");
  }
  return cfg;
}

json config_to_json(const SystemConfig& cfg) {
  json j;
  j["version"] = cfg.version;
  j["dim"] = cfg.dim;
  json lo = json::array(), hi = json::array();
  for (int c = 0; c < cfg.dim; ++c) {
    lo.push_back(cfg.lo(c));
    hi.push_back(cfg.hi(c));
  }
  j["box"] = {{"lo", std::move(lo)}, {"hi", std::move(hi)}};
  json maps = json::array();
  for (std::size_t k = 0; k < cfg.maps.size(); ++k) {
    json m = map_to_json(cfg.maps[k]);
    m["id"] = cfg.ids[k];
    maps.push_back(std::move(m));
  }
  j["maps"] = std::move(maps);
  json coeffs = json::array();
  for (const auto& ce : cfg.coefficients)
    coeffs.push_back({{"i", ce.i}, {"j", ce.j}, {"a", ce.a}, {"b", ce.b}, {"c", ce.c}});
  j["coefficients"] = std::move(coeffs);
  j["defaults"] = {{"tol", cfg.defaults.tol},
                   {"eps_decimate", cfg.defaults.eps_decimate},
                   {"max_iter", cfg.defaults.max_iter},
                   {"seed", cfg.defaults.seed}};
  return j;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open configuration file", path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what(), path);
  }
  try {
    return config_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), path);
  }
}

Index map_index(const SystemConfig& cfg, const std::string& id) {
  for (std::size_t k = 0; k < cfg.ids.size(); ++k)
    if (cfg.ids[k] == id) return static_cast<Index>(k);
  fail("unknown map id '" + id + "'", "$.maps");
}

IFSSystem<double> build_system(const SystemConfig& cfg) {
  const Index n = static_cast<Index>(cfg.maps.size());
  auto table = CoefficientTable<double>::zero(n);
  for (const auto& ce : cfg.coefficients)
    table.set_entry(map_index(cfg, ce.i), map_index(cfg, ce.j), ce.a, ce.b, ce.c);
  DomainBox<double> box(cfg.lo, cfg.hi);
  return IFSSystem<double>(cfg.maps, std::move(table), std::move(box));
}

void write_cloud_csv(std::ostream& out, const PointCloud<double>& cloud) {
  char buf[32];
  for (Index i = 0; i < cloud.rows(); ++i) {
    for (Index c = 0; c < cloud.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", cloud(i, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

void write_cloud_csv_file(const std::string& path, const PointCloud<double>& cloud) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file", path);
  write_cloud_csv(out, cloud);
}

PointCloud<double> read_cloud_csv(std::istream& in, const std::string& label) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    const char* p = line.c_str();
    for (;;) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) fail("malformed number", label + ":" + std::to_string(lineno));
      if (!std::isfinite(v)) fail("non-finite coordinate", label + ":" + std::to_string(lineno));
      row.push_back(v);
      p = end;
      while (*p == ' ') ++p;
      if (*p == ',') {
        ++p;
        continue;
      }
      if (*p == '\0' || *p == '\r') break;
      fail("unexpected character in CSV row", label + ":" + std::to_string(lineno));
    }
    if (!rows.empty() && rows.front().size() != row.size())
      fail("inconsistent column count", label + ":" + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail("empty point cloud", label);
  PointCloud<double> out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      out(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
  return out;
}

PointCloud<double> read_cloud_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open point cloud file", path);
  return read_cloud_csv(in, path);
}

json attractor_report(const AttractorResult<double>& res, const std::string& cloud_file) {
  return json{{"iterations", res.iterations},
              {"step_gap", res.step_gap},
              {"rate_bound", res.rate_bound},
              {"decimation_budget", res.decimation_budget},
              {"cloud_file", cloud_file}};
}

json beta_counterexample_json(const BetaCounterexample<double>& cex, const SystemConfig& cfg) {
  json x = json::array(), y = json::array();
  for (Index c = 0; c < cex.x.size(); ++c) {
    x.push_back(cex.x(c));
    y.push_back(cex.y(c));
  }
  return json{{"i", cfg.ids[static_cast<std::size_t>(cex.i)]},
              {"j", cfg.ids[static_cast<std::size_t>(cex.j)]},
              {"x", std::move(x)},
              {"y", std::move(y)},
              {"lhs", cex.lhs},
              {"rhs", cex.rhs}};
}

}  // namespace cvxifs
