#include "cvxifs/cli.hpp"

#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "cvxifs/codespace.hpp"
#include "cvxifs/io.hpp"
#include "cvxifs/render.hpp"
#include "cvxifs/system.hpp"

namespace cvxifs::cli {

namespace {

// "x1,...,xd;y1,...,yd" -> cloud, one point per ';' group
PointCloud<double> parse_points(const std::string& text, int dim) {
  std::vector<std::vector<double>> pts;
  std::stringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    if (group.empty()) continue;
    std::vector<double> coords;
    std::stringstream cs(group);
    std::string tok;
    while (std::getline(cs, tok, ',')) {
      try {
        std::size_t used = 0;
        coords.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("malformed coordinate '" + tok + "'", text);
      }
    }
    if (static_cast<int>(coords.size()) != dim)
      throw ParseError("point needs " + std::to_string(dim) + " coordinates", text);
    pts.push_back(std::move(coords));
  }
  if (pts.empty()) throw ParseError("no points given", text);
  PointCloud<double> out(static_cast<Index>(pts.size()), dim);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int c = 0; c < dim; ++c) out(static_cast<Index>(i), c) = pts[i][static_cast<std::size_t>(c)];
  return out;
}

PointCloud<double> default_b0(const SystemConfig& cfg) {
  PointCloud<double> b(1, cfg.dim);
  b.row(0) = ((cfg.lo + cfg.hi) / 2.0).transpose();
  return b;
}

std::pair<int, int> parse_size(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw ParseError("size must look like 512x512", text);
  try {
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw ParseError("size must look like 512x512", text);
  }
}

int cmd_validate(const std::string& cfg_path, long long samples,
                 std::optional<std::uint64_t> seed_opt, std::ostream& out) {
  const SystemConfig cfg = load_config(cfg_path);
  const auto sys = build_system(cfg);
  out << "alpha: d = " << sys.contraction_constant() << " < 1\n";
  const std::uint64_t seed = seed_opt.value_or(cfg.defaults.seed);
  const auto cex = falsify_beta(sys, samples, seed);
  if (cex) {
    out << "beta: counterexample found\n";
    out << beta_counterexample_json(*cex, cfg).dump() << "\n";
    return 4;
  }
  out << "beta: no counterexample in " << samples << " samples per pair (seed " << seed << ")\n";
  return 0;
}

int cmd_attract(const std::string& cfg_path, const std::string& out_csv,
                const std::string& report_path, const std::string& b0_text,
                std::optional<double> tol, std::optional<double> eps,
                std::optional<long long> max_iter, std::ostream& out) {
  const SystemConfig cfg = load_config(cfg_path);
  const auto sys = build_system(cfg);
  const PointCloud<double> b0 = b0_text.empty() ? default_b0(cfg) : parse_points(b0_text, cfg.dim);
  const auto res = attractor(sys, b0, tol.value_or(cfg.defaults.tol),
                             eps.value_or(cfg.defaults.eps_decimate),
                             max_iter.value_or(cfg.defaults.max_iter));
  write_cloud_csv_file(out_csv, res.cloud);
  if (!report_path.empty()) {
    std::ofstream r(report_path);
    if (!r) throw ParseError("cannot open report file", report_path);
    r << attractor_report(res, out_csv).dump(2) << "\n";
  }
  out << "converged: iterations = " << res.iterations << ", cloud = " << res.cloud.rows()
      << " points, step_gap = " << res.step_gap << ", rate_bound = " << res.rate_bound
      << ", decimation_budget = " << res.decimation_budget << "\n";
  out << "cloud written to " << out_csv << "\n";
  return 0;
}

int cmd_certify(const std::string& cfg_path, long long n_max, const std::string& against,
                const std::string& b0_text, std::ostream& out) {
  const SystemConfig cfg = load_config(cfg_path);
  const auto sys = build_system(cfg);
  const PointCloud<double> b0 = b0_text.empty() ? default_b0(cfg) : parse_points(b0_text, cfg.dim);
  std::optional<PointCloud<double>> ref;
  if (!against.empty()) ref = read_cloud_csv_file(against);

  out << (ref ? "n,rate_bound,measured\n" : "n,rate_bound\n");
  PointCloud<double> it = b0;
  constexpr Index kMaxExactCloud = Index{1} << 22;
  for (long long n = 0; n <= n_max; ++n) {
    out << n << "," << std::setprecision(17) << rate_certificate(sys, b0, n);
    if (ref) out << "," << hausdorff(it, *ref);
    out << "\n";
    if (n < n_max && ref) {
      if (it.rows() * sys.size() > kMaxExactCloud)
        throw BudgetError("certify: exact iterate would exceed " +
                          std::to_string(kMaxExactCloud) + " points; reduce -n");
      it = decimate(hutchinson(sys, it), 0.0);
    }
  }
  return 0;
}

int cmd_project(const std::string& cfg_path, const std::string& word, std::optional<double> tol,
                const std::string& b0_text, std::ostream& out) {
  const SystemConfig cfg = load_config(cfg_path);
  const auto sys = build_system(cfg);
  const CodeStream stream = parse_stream(word, sys.size());
  const PointCloud<double> b = b0_text.empty() ? default_b0(cfg) : parse_points(b0_text, cfg.dim);
  const auto res = project(sys, stream, b, tol.value_or(cfg.defaults.tol));
  nlohmann::json pt = nlohmann::json::array();
  for (Index c = 0; c < res.point.size(); ++c) pt.push_back(res.point(c));
  out << nlohmann::json{{"point", std::move(pt)},
                        {"depth", res.depth},
                        {"residual_diam", res.residual_diam}}
             .dump()
      << "\n";
  return 0;
}

int cmd_render(const std::string& cfg_path, const std::string& out_pgm, const std::string& size,
               long long iters, long long burn_in, std::optional<std::uint64_t> seed_opt,
               bool deterministic, const std::string& points_csv, std::ostream& out) {
  const SystemConfig cfg = load_config(cfg_path);
  const auto sys = build_system(cfg);
  if (cfg.dim > 2) throw ValidationError("render: only 1D and 2D systems can be rendered");
  const auto [w, h] = parse_size(size);

  PointCloud<double> pts;
  if (deterministic) {
    const auto res = attractor(sys, default_b0(cfg), cfg.defaults.tol, cfg.defaults.eps_decimate,
                               cfg.defaults.max_iter);
    pts = res.cloud;
  } else {
    pts = chaos_game(sys, iters, burn_in, seed_opt.value_or(cfg.defaults.seed));
  }

  Eigen::Vector2d lo, hi;
  lo.x() = cfg.lo(0);
  hi.x() = cfg.hi(0);
  if (cfg.dim == 2) {
    lo.y() = cfg.lo(1);
    hi.y() = cfg.hi(1);
  } else {
    lo.y() = -0.5;
    hi.y() = 0.5;
  }
  const Raster raster = rasterize(pts, w, h, lo, hi);
  std::ofstream pgm(out_pgm, std::ios::binary);
  if (!pgm) throw ParseError("cannot open output file", out_pgm);
  write_pgm(raster, pgm);
  if (!points_csv.empty()) write_cloud_csv_file(points_csv, pts);
  out << "plotted " << raster.total() << " points (" << raster.dropped << " outside the viewport) to "
      << out_pgm << "\n";
  return 0;
}

int cmd_diagnose(const std::string& cfg_path, int depth, std::optional<std::uint64_t> seed_opt,
                 int pairs, std::ostream& out) {
  const SystemConfig cfg = load_config(cfg_path);
  const auto sys = build_system(cfg);
  const double d = sys.contraction_constant();
  const std::uint64_t seed0 = seed_opt.value_or(cfg.defaults.seed);
  constexpr double kSlack = 1e-12;

  bool all_pass = true;
  for (int p = 0; p < pairs; ++p) {
    std::mt19937_64 rng(seed0 + static_cast<std::uint64_t>(p));
    const auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const auto draw_cloud = [&](Index rows) {
      PointCloud<double> c(rows, cfg.dim);
      for (Index i = 0; i < rows; ++i)
        for (int col = 0; col < cfg.dim; ++col)
          c(i, col) = cfg.lo(col) + (cfg.hi(col) - cfg.lo(col)) * unit();
      return c;
    };
    const PointCloud<double> y = draw_cloud(8);
    const PointCloud<double> z = draw_cloud(8);
    const auto diag = diagnostics_xy(sys, y, z, depth);

    out << "pair " << (p + 1) << " (seed " << (seed0 + static_cast<std::uint64_t>(p)) << ")\n";
    out << "k,x_k,y_k\n";
    out << std::setprecision(17);
    for (int k = 0; k <= depth; ++k) {
      out << k << "," << diag.x[static_cast<std::size_t>(k)];
      if (k >= 1) out << "," << diag.y(static_cast<std::size_t>(k));
      out << "\n";
    }
    bool ineq1 = true, mono = true, twostep = true;
    for (int k = 1; k + 1 <= depth; ++k) {
      ineq1 = ineq1 && diag.x[static_cast<std::size_t>(k + 1)] <=
                           d * diag.y(static_cast<std::size_t>(k)) + kSlack;
      mono = mono && diag.y(static_cast<std::size_t>(k + 1)) <=
                         diag.y(static_cast<std::size_t>(k)) + kSlack;
    }
    for (int k = 1; k + 2 <= depth; ++k)
      twostep = twostep && diag.y(static_cast<std::size_t>(k + 2)) <=
                               d * diag.y(static_cast<std::size_t>(k)) + kSlack;
    out << "x_{k+1} <= d*y_k: " << (ineq1 ? "PASS" : "FAIL") << "\n";
    out << "y_k non-increasing: " << (mono ? "PASS" : "FAIL") << "\n";
    out << "y_{k+2} <= d*y_k: " << (twostep ? "PASS" : "FAIL") << "\n";
    all_pass = all_pass && ineq1 && mono && twostep;
  }
  out << "overall: " << (all_pass ? "PASS" : "FAIL") << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"attractors of iterated function systems of convex contractions"};
  app.name("convex-ifs");

  int threads = 1;
  app.add_option("--threads", threads, "worker threads for pairwise-distance loops")
      ->envname("CONVEX_IFS_THREADS")
      ->check(CLI::PositiveNumber);

  std::string cfg_path, out_path, report_path, b0_text, against, word, size = "512x512",
                                                                       points_csv;
  long long samples = 10000, n_max = 0, iters = 100000, burn_in = 100;
  int depth = 8, pairs = 1;
  std::optional<double> tol, eps;
  std::optional<long long> max_iter;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;

  auto* validate = app.add_subcommand("validate", "check the contraction conditions");
  validate->add_option("config", cfg_path)->required();
  validate->add_option("--samples", samples, "sample pairs per (i,j)")->check(CLI::PositiveNumber);
  validate->add_option("--seed", seed);

  auto* attract = app.add_subcommand("attract", "iterate the set map to the attractor");
  attract->add_option("config", cfg_path)->required();
  attract->add_option("-o,--output", out_path, "cloud CSV")->required();
  attract->add_option("--report", report_path, "JSON report");
  attract->add_option("--b0", b0_text, "seed cloud, e.g. \"0.5\" or \"0.9;0.2\"");
  attract->add_option("--tol", tol);
  attract->add_option("--eps", eps, "decimation tolerance per step");
  attract->add_option("--max-iter", max_iter);

  auto* certify = app.add_subcommand("certify", "print the convergence-rate certificate");
  certify->add_option("config", cfg_path)->required();
  certify->add_option("-n,--steps", n_max)->required()->check(CLI::NonNegativeNumber);
  certify->add_option("--against", against, "reference cloud CSV for measured errors");
  certify->add_option("--b0", b0_text);

  auto* project = app.add_subcommand("project", "project a code-space word onto the attractor");
  project->add_option("config", cfg_path)->required();
  project->add_option("--word", word, "stream, e.g. \"1|2\" for 1222...")->required();
  project->add_option("--tol", tol);
  project->add_option("--b0", b0_text);

  auto* render = app.add_subcommand("render", "rasterize the attractor to a PGM image");
  render->add_option("config", cfg_path)->required();
  render->add_option("-o,--output", out_path)->required();
  render->add_option("--size", size, "WxH, default 512x512");
  render->add_option("--iters", iters)->check(CLI::PositiveNumber);
  render->add_option("--burn-in", burn_in)->check(CLI::NonNegativeNumber);
  render->add_option("--seed", seed);
  render->add_flag("--deterministic", deterministic, "rasterize the engine cloud instead");
  render->add_option("--points", points_csv, "also write the plotted points as CSV");

  auto* diagnose = app.add_subcommand("diagnose", "exhaustive word-sequence diagnostics");
  diagnose->add_option("config", cfg_path)->required();
  diagnose->add_option("--depth", depth)->required()->check(CLI::PositiveNumber);
  diagnose->add_option("--seed", seed);
  diagnose->add_option("--pairs", pairs)->check(CLI::PositiveNumber);

  app.require_subcommand(1);

  std::vector<const char*> argv;
  argv.push_back("convex-ifs");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  set_threads(threads);
  try {
    if (app.got_subcommand(validate)) return cmd_validate(cfg_path, samples, seed, out);
    if (app.got_subcommand(attract))
      return cmd_attract(cfg_path, out_path, report_path, b0_text, tol, eps, max_iter, out);
    if (app.got_subcommand(certify)) return cmd_certify(cfg_path, n_max, against, b0_text, out);
    if (app.got_subcommand(project)) return cmd_project(cfg_path, word, tol, b0_text, out);
    if (app.got_subcommand(render))
      return cmd_render(cfg_path, out_path, size, iters, burn_in, seed, deterministic, points_csv,
                        out);
    if (app.got_subcommand(diagnose)) return cmd_diagnose(cfg_path, depth, seed, pairs, out);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionMismatch& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace cvxifs::cli
