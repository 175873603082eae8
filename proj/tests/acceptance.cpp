// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Heavier runs than the unit tests; expects the shipped fixture configs.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvxifs/cli.hpp"
#include "cvxifs/codespace.hpp"
#include "cvxifs/io.hpp"
#include "cvxifs/render.hpp"
#include "cvxifs/system.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using cvxifs::CodeStream;
using cvxifs::hausdorff;
using cvxifs::hutchinson;
using cvxifs::IFSSystem;
using cvxifs::Index;
using cvxifs::PointCloud;
using cvxifs::Word;
using Eigen::MatrixXd;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << id << ": " << detail << "\n";
  if (!pass) ++g_failures;
}

std::string fixture_dir = CVXIFS_FIXTURE_DIR;

std::string fixture(const std::string& name) { return fixture_dir + "/" + name; }

fs::path work_dir() {
  const fs::path p = fs::temp_directory_path() / "cvxifs_acceptance";
  fs::create_directories(p);
  return p;
}

MatrixXd cloud1(std::initializer_list<double> xs) {
  MatrixXd m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

std::vector<double> sorted_col(const MatrixXd& m) {
  std::vector<double> v(m.data(), m.data() + m.rows());
  std::sort(v.begin(), v.end());
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cvxifs::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

char fmtbuf[256];
template <typename... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(fmtbuf, sizeof fmtbuf, f, a...);
  return fmtbuf;
}

// Rigorous upper bound on the Lipschitz constant of a map on the box:
// exact spectral norm for (flattened) affine maps; for polynomials a dense
// sample of |p'| plus the curvature correction (h/2) * sup|p''|, which
// dominates anything a sample grid of pitch h can miss.
double sound_lip(const cvxifs::MapDescriptor<double>& m, const cvxifs::DomainBox<double>& box) {
  const auto flat = cvxifs::flatten(m);
  if (flat && flat->is_affine()) return cvxifs::lipschitz_bound(*flat, box).value;
  if (flat && flat->is_poly1d()) {
    const auto& coeffs = std::get<cvxifs::Poly1DMap<double>>(flat->node).coeffs;
    const auto d1 = cvxifs::poly_derivative(coeffs);
    const auto d2 = cvxifs::poly_derivative(d1);
    const double lo = box.lo(0), hi = box.hi(0);
    const int samples = 50001;
    const double pitch = (hi - lo) / (samples - 1);
    const auto horner = [](const std::vector<double>& p, double x) {
      double acc = 0;
      for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
      return acc;
    };
    double sup1 = 0;
    for (int k = 0; k < samples; ++k)
      sup1 = std::max(sup1, std::abs(horner(d1, lo + (hi - lo) * k / (samples - 1))));
    const double big = std::max(std::abs(lo), std::abs(hi));
    double sup2 = 0, pw = 1;
    for (double c : d2) {
      sup2 += std::abs(c) * pw;
      pw *= big;
    }
    return sup1 + 0.5 * pitch * sup2;
  }
  return cvxifs::lipschitz_bound(m, box).value;  // product of parts, still sound
}

// Exact Hausdorff distance between a 1D cloud and the true attractor of the
// fixture: the middle-thirds Cantor set, or the full interval [0,1].
double exact_h_cantor(const MatrixXd& cloud) {
  const auto pts = sorted_col(cloud);
  double h = oracle::cantor_sup_dist(pts);
  for (double p : pts) h = std::max(h, oracle::cantor_dist(p));
  return h;
}

double exact_h_interval(const MatrixXd& cloud) {
  return oracle::h_vs_unit_interval(sorted_col(cloud));
}

// -------------------------------------------------------------------------
// AC1: cantor reproduction through the CLI, checked against the analytic
// level-12 endpoint set, within the stated wall-clock budget.
void ac1() {
  const auto dir = work_dir();
  const auto csv = (dir / "cantor_cloud.csv").string();
  const auto rep = (dir / "cantor_report.json").string();
  const auto t0 = std::chrono::steady_clock::now();
  const auto r =
      run_cli({"attract", fixture("cantor.json"), "-o", csv, "--report", rep, "--b0", "0.5"});
  const double secs = seconds_since(t0);
  if (r.code != 0) {
    report("AC1", false, "attract exited " + std::to_string(r.code) + ": " + r.err);
    return;
  }
  const MatrixXd cloud = cvxifs::read_cloud_csv_file(csv);
  const auto endpoints = oracle::cantor_endpoints(12);
  MatrixXd ref(static_cast<Eigen::Index>(endpoints.size()), 1);
  for (std::size_t i = 0; i < endpoints.size(); ++i)
    ref(static_cast<Eigen::Index>(i), 0) = endpoints[i];
  const double h = hausdorff(cloud, ref);
  report("AC1", h <= 1e-4 && secs <= 5.0,
         fmt("cantor vs level-12 endpoints h = %.3e (<= 1e-4), %.2f s (<= 5 s)", h, secs));
}

// -------------------------------------------------------------------------
// AC2: the quadratic system converges although f1 is not a contraction.
void ac2() {
  const auto cfg = cvxifs::load_config(fixture("quadratic.json"));
  const auto sys = cvxifs::build_system(cfg);
  const auto lip = cvxifs::lipschitz_bound(sys.map(0), sys.box());
  const auto res = cvxifs::attractor(sys, cloud1({0.3}), cfg.defaults.tol,
                                     cfg.defaults.eps_decimate, cfg.defaults.max_iter);
  MatrixXd grid(1001, 1);
  for (int i = 0; i <= 1000; ++i) grid(i, 0) = i / 1000.0;
  const double h = hausdorff(res.cloud, grid);
  report("AC2", h <= 2e-3 && lip.value >= 0.999,
         fmt("quadratic vs 1e-3 grid h = %.3e (<= 2e-3), lip(f1) = %.4f (>= 0.999)", h, lip.value));
}

// -------------------------------------------------------------------------
// AC3: the speed-of-convergence certificate dominates the distance of the
// undecimated iterates to the attractor for n <= 50, three seeds per
// fixture.  Exact clouds are only materializable to about n = 20 (growth is
// |I|^n), so beyond that the measured value is replaced by a sound upper
// bound: with A equal to the union of f_w(A) over words of length k,
//   h(F^{e+k}(B), A) <= max_{|w|=k} Lip(f_w) * h(F^e(B), A),
// and the word Lipschitz constants factor through single and pairwise
// composition bounds.  The attractors themselves are known exactly for both
// fixtures (Cantor set, unit interval), so the small-n measurements carry no
// reference error.
void ac3() {
  struct Fixture {
    const char* file;
    double (*exact_h)(const MatrixXd&);
  };
  const Fixture fixtures[] = {{"cantor.json", exact_h_cantor},
                              {"quadratic.json", exact_h_interval}};
  const int n_exact = 20, n_full = 50;

  bool all_ok = true;
  std::string detail;
  for (const auto& fx : fixtures) {
    const auto sys = cvxifs::build_system(cvxifs::load_config(fixture(fx.file)));

    double lip1 = 0;  // max over single maps
    for (Index i = 0; i < sys.size(); ++i) lip1 = std::max(lip1, sound_lip(sys.map(i), sys.box()));
    double lip2 = 0;  // max over pairwise compositions, analysed in closed form
    for (Index i = 0; i < sys.size(); ++i)
      for (Index j = 0; j < sys.size(); ++j)
        lip2 = std::max(
            lip2, sound_lip(compose_word(sys.maps(), {static_cast<int>(i), static_cast<int>(j)}),
                            sys.box()));

    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      std::mt19937_64 rng(seed);
      const double x0 = 0.05 + 0.9 * oracle::unit_double(rng);
      const MatrixXd b0 = cloud1({x0});

      MatrixXd it = b0;
      double worst_margin = std::numeric_limits<double>::infinity();
      double h_at_exact = 0;
      for (int n = 0; n <= n_full; ++n) {
        double measured;
        if (n <= n_exact) {
          measured = fx.exact_h(it);
          if (n == n_exact) h_at_exact = measured;
          if (n < n_exact) it = cvxifs::decimate(hutchinson(sys, it), 0.0);
        } else {
          const int k = n - n_exact;
          const double via_pairs = std::pow(lip2, k / 2) * std::pow(lip1, k % 2);
          measured = h_at_exact * std::min(std::pow(lip1, k), via_pairs);
        }
        const double cert = cvxifs::rate_certificate(sys, b0, n);
        worst_margin = std::min(worst_margin, cert + 1e-12 - measured);
        if (measured > cert + 1e-12) all_ok = false;
      }
      if (worst_margin < 0 || detail.empty())
        detail = fmt("%s seed %llu worst margin %.3e", fx.file,
                     static_cast<unsigned long long>(seed), worst_margin);
    }
  }
  report("AC3", all_ok, "certificate dominates measured error for n <= 50 (" + detail + ")");
}

// -------------------------------------------------------------------------
// AC4: proof-inequality suite at depth 12 over 10 seeded random pairs per
// 2-map fixture, 1e-12 slack.
void ac4() {
  const int depth = 12;
  const double slack = 1e-12;
  long long checks = 0, violations = 0;
  for (const char* file : {"cantor.json", "quadratic.json"}) {
    const auto sys = cvxifs::build_system(cvxifs::load_config(fixture(file)));
    const double d = sys.contraction_constant();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      std::mt19937_64 rng(seed * 7919);
      const auto draw = [&](Index rows) {
        MatrixXd c(rows, 1);
        for (Index i = 0; i < rows; ++i) c(i, 0) = oracle::unit_double(rng);
        return c;
      };
      const MatrixXd y = draw(5), z = draw(6);
      const auto diag = cvxifs::diagnostics_xy(sys, y, z, depth);
      for (int k = 1; k + 1 <= depth; ++k) {
        ++checks;
        if (diag.x[static_cast<std::size_t>(k + 1)] >
            d * diag.y(static_cast<std::size_t>(k)) + slack)
          ++violations;
        ++checks;
        if (diag.y(static_cast<std::size_t>(k + 1)) > diag.y(static_cast<std::size_t>(k)) + slack)
          ++violations;
      }
      for (int k = 1; k + 2 <= depth; ++k) {
        ++checks;
        if (diag.y(static_cast<std::size_t>(k + 2)) >
            d * diag.y(static_cast<std::size_t>(k)) + slack)
          ++violations;
      }
      MatrixXd fy = y, fz = z;
      for (int k = 0; k <= depth; ++k) {
        ++checks;
        if (hausdorff(fy, fz) > diag.x[static_cast<std::size_t>(k)] + slack) ++violations;
        if (k < depth) {
          fy = cvxifs::decimate(hutchinson(sys, fy), 0.0);
          fz = cvxifs::decimate(hutchinson(sys, fz), 0.0);
        }
      }
    }
  }
  report("AC4", violations == 0, fmt("%lld inequality checks, %lld violations", checks, violations));
}

// -------------------------------------------------------------------------
// AC5: canonical projection on the cantor fixture over all length-10 words
// extended periodically: density, equivariance, quantitative continuity.
void ac5() {
  const auto cfg = cvxifs::load_config(fixture("cantor.json"));
  const auto sys = cvxifs::build_system(cfg);
  const MatrixXd b = cloud1({0.5});
  const auto res = cvxifs::attractor(sys, b, cfg.defaults.tol, cfg.defaults.eps_decimate,
                                     cfg.defaults.max_iter);
  const int n = 10;
  const int words = 1 << n;

  MatrixXd projected(words, 1);
  double equiv_err = 0;
  for (int bits = 0; bits < words; ++bits) {
    Word w(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) w[static_cast<std::size_t>(t)] = (bits >> t) & 1;
    const auto stream = CodeStream::periodic({}, w);
    const auto base = project(sys, stream, b, 1e-12);
    projected(bits, 0) = base.point(0);
    for (int i = 0; i < 2; ++i) {
      const auto shifted = project(sys, stream.prepend(i), b, 1e-12);
      equiv_err =
          std::max(equiv_err, cvxifs::dist(shifted.point, eval(sys.map(i), base.point)));
    }
  }
  const double density = hausdorff(res.cloud, projected);
  const double density_bound = std::pow(3.0, -n) + 1e-6;

  const auto profile = cvxifs::continuity_modulus_profile(sys, res.cloud, n);
  bool cont_ok = true;
  for (int k = 1; k <= n; ++k) {
    if (profile[static_cast<std::size_t>(k - 1)] > std::pow(3.0, -k) * 1.01) cont_ok = false;
    if (k > 1 &&
        profile[static_cast<std::size_t>(k - 1)] > profile[static_cast<std::size_t>(k - 2)])
      cont_ok = false;
  }

  const bool pass = density <= density_bound && equiv_err <= 1e-9 && cont_ok;
  report(
      "AC5", pass,
      fmt("density h = %.3e (<= %.3e), equivariance = %.3e (<= 1e-9), modulus within 1.01*3^-n: %s",
          density, density_bound, equiv_err, cont_ok ? "yes" : "no"));
}

// -------------------------------------------------------------------------
// AC6: cylinder diameters shrink monotonically along every length-8 word and
// successive cylinders nest within the accumulated tolerance.
void ac6() {
  const auto cfg = cvxifs::load_config(fixture("cantor.json"));
  const auto sys = cvxifs::build_system(cfg);
  const auto res = cvxifs::attractor(sys, cloud1({0.5}), cfg.defaults.tol,
                                     cfg.defaults.eps_decimate, cfg.defaults.max_iter);
  const MatrixXd a = cvxifs::decimate(res.cloud, 3e-5);
  const double kappa = hausdorff(hutchinson(sys, a), a);

  bool mono_ok = true, size_ok = true, nest_ok = true;
  double max_final = 0;
  for (int bits = 0; bits < (1 << 8); ++bits) {
    Word w;
    double prev = cvxifs::diameter(a);
    MatrixXd prev_cyl = a;
    for (int t = 0; t < 8; ++t) {
      w.push_back((bits >> t) & 1);
      const MatrixXd cyl = cvxifs::cylinder(sys, w, a);
      const double diam = cvxifs::diameter(cyl);
      if (diam > prev + 1e-12) mono_ok = false;
      if (t >= 1) {
        const double lip = std::pow(1.0 / 3.0, t);  // exact for the cantor maps
        if (cvxifs::directed_hausdorff(cyl, prev_cyl) > lip * kappa + 1e-12) nest_ok = false;
      }
      prev = diam;
      prev_cyl = cyl;
      if (t == 7) {
        max_final = std::max(max_final, diam);
        if (diam > 1e-3) size_ok = false;
      }
    }
  }
  report("AC6", mono_ok && size_ok && nest_ok,
         fmt("monotone: %s, max diam at depth 8 = %.3e (<= 1e-3), nesting: %s",
             mono_ok ? "yes" : "no", max_final, nest_ok ? "yes" : "no"));
}

// -------------------------------------------------------------------------
// AC7: single-map Picard iteration on the non-contractive x^2/2.
void ac7() {
  const auto f = cvxifs::MapDescriptor<double>::poly1d({0.0, 0.0, 0.5});
  Eigen::VectorXd x0(1);
  x0(0) = 1.0;
  try {
    const auto r = cvxifs::picard_fixed_point(f, x0, 1e-9, 60);
    report("AC7", std::abs(r.point(0)) <= 1e-9,
           fmt("picard(x^2/2) -> |x| = %.3e (<= 1e-9) in %lld iterations", std::abs(r.point(0)),
               r.iterations));
  } catch (const std::exception& e) {
    report("AC7", false, std::string("picard failed: ") + e.what());
  }
}

// -------------------------------------------------------------------------
// AC8: the falsifier flags the planted bad entry through the CLI (exit 4).
void ac8() {
  json cfg = json::parse(slurp(fixture("quadratic.json")));
  bool replaced = false;
  for (auto& entry : cfg.at("coefficients")) {
    if (entry.at("i") == "f1" && entry.at("j") == "f1") {
      entry = {{"i", "f1"}, {"j", "f1"}, {"a", 0.1}, {"b", 0.1}, {"c", 0.1}};
      replaced = true;
    }
  }
  if (!replaced) {
    report("AC8", false, "fixture is missing the (f1,f1) entry");
    return;
  }
  const auto dir = work_dir();
  const fs::path planted = dir / "quadratic_planted.json";
  std::ofstream(planted) << cfg.dump(2);
  const auto r = run_cli({"validate", planted.string(), "--samples", "100000", "--seed", "42"});
  if (r.code != 4) {
    report("AC8", false, "expected exit 4, got " + std::to_string(r.code));
    return;
  }
  const auto brace = r.out.find('{');
  const json cex = json::parse(r.out.substr(brace));
  const double lhs = cex.at("lhs").get<double>(), rhs = cex.at("rhs").get<double>();
  // the hand-checked witness x = 1, y = 0.9 confirms the region is violating
  const double lhs_hand = (1.0 - std::pow(0.9, 4)) / 8.0;
  const double rhs_hand = 0.1 * (0.1 + 0.095 + 0.095);
  report("AC8", lhs > rhs && lhs_hand > rhs_hand,
         fmt("exit 4 with lhs = %.4e > rhs = %.4e (hand pair: %.4e > %.4e)", lhs, rhs, lhs_hand,
             rhs_hand));
}

// -------------------------------------------------------------------------
// AC9: attractors are independent of the seed cloud and nearly fixed under
// the set map, on all three fixtures.
void ac9() {
  struct Case {
    const char* file;
    MatrixXd b0a, b0b;
  };
  std::vector<Case> cases;
  cases.push_back({"cantor.json", cloud1({0.1}), cloud1({0.9, 0.2})});
  cases.push_back({"quadratic.json", cloud1({0.1}), cloud1({0.9, 0.2})});
  MatrixXd s_a(1, 2), s_b(2, 2);
  s_a << 0.1, 0.1;
  s_b << 0.9, 0.2, 0.2, 0.9;
  cases.push_back({"sierpinski.json", s_a, s_b});

  bool all_ok = true;
  std::string detail;
  for (const auto& cs : cases) {
    const auto cfg = cvxifs::load_config(fixture(cs.file));
    const auto sys = cvxifs::build_system(cfg);
    const double tol = cfg.defaults.tol, eps = cfg.defaults.eps_decimate;
    const auto ra = cvxifs::attractor(sys, cs.b0a, tol, eps, cfg.defaults.max_iter);
    const auto rb = cvxifs::attractor(sys, cs.b0b, tol, eps, cfg.defaults.max_iter);
    const double agree = hausdorff(ra.cloud, rb.cloud);
    const double agree_bound = tol + ra.decimation_budget + rb.decimation_budget;
    const double fixed = hausdorff(hutchinson(sys, ra.cloud), ra.cloud);
    const double fixed_bound = tol + static_cast<double>(sys.size()) * eps;
    if (agree > agree_bound || fixed > fixed_bound) all_ok = false;
    detail += fmt("%s: agree %.2e<=%.2e fixed %.2e<=%.2e; ", cs.file, agree, agree_bound, fixed,
                  fixed_bound);
  }
  report("AC9", all_ok, detail);
}

// -------------------------------------------------------------------------
// AC10: chaos game vs deterministic engine at 512x512, plus bit-identical
// PGM output for a fixed seed.
void ac10() {
  const auto cfg = cvxifs::load_config(fixture("sierpinski.json"));
  const auto sys = cvxifs::build_system(cfg);
  const MatrixXd orbit = cvxifs::chaos_game(sys, 100000, 100, 42);
  MatrixXd b0(1, 2);
  b0 << 0.5, 0.5;
  const auto res = cvxifs::attractor(sys, b0, cfg.defaults.tol, cfg.defaults.eps_decimate,
                                     cfg.defaults.max_iter);
  const double h = hausdorff(orbit, res.cloud);
  const double pitch2 = 2.0 / 512.0;

  const auto dir = work_dir();
  const auto p1 = (dir / "s1.pgm").string(), p2 = (dir / "s2.pgm").string();
  const auto r1 = run_cli({"render", fixture("sierpinski.json"), "-o", p1, "--size", "512x512",
                           "--iters", "100000", "--seed", "42"});
  const auto r2 = run_cli({"render", fixture("sierpinski.json"), "-o", p2, "--size", "512x512",
                           "--iters", "100000", "--seed", "42"});
  const bool bytes_equal = r1.code == 0 && r2.code == 0 && slurp(p1) == slurp(p2);
  report("AC10", h <= pitch2 && bytes_equal,
         fmt("chaos vs deterministic h = %.3e (<= %.3e), identical PGM bytes: %s", h, pitch2,
             bytes_equal ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) fixture_dir = argv[1];
  std::cout.setf(std::ios::unitbuf);
  ac1();
  ac2();
  ac3();
  ac4();
  ac5();
  ac6();
  ac7();
  ac8();
  ac9();
  ac10();
  std::cout << (g_failures == 0 ? "all criteria passed\n"
                                : std::to_string(g_failures) + " criteria failed\n");
  return g_failures;
}
