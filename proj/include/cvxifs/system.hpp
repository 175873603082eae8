#pragma once

// Iterated function systems whose pairwise compositions satisfy a
// three-coefficient contraction inequality: for indices i, j and all x, y in
// the domain,
//
//   |f_i(f_j(x)) - f_i(f_j(y))| <= a_ij |x - y| + b_ij |f_i(x) - f_i(y)|
//                                  + c_ij |f_j(x) - f_j(y)|
//
// with d = max_ij (a_ij + b_ij + c_ij) < 1.  Individual maps need not be
// contractions.  This header holds the coefficient table, the sampling
// falsifier for the inequality, the Hutchinson set map, the attractor
// iteration with its convergence-rate certificate, and the x_n / y_n
// diagnostic sequences used by the convergence argument.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvxifs/errors.hpp"
#include "cvxifs/geometry.hpp"
#include "cvxifs/maps.hpp"

namespace cvxifs {

// ---------------------------------------------------------------------------
// Coefficient table

template <typename Scalar>
class CoefficientTable {
 public:
  using Arr = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  CoefficientTable(Arr a, Arr b, Arr c) : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
    const Index n = a_.rows();
    if (n == 0 || a_.cols() != n || b_.rows() != n || b_.cols() != n || c_.rows() != n ||
        c_.cols() != n)
      throw ValidationError("coefficient table: a, b, c must be square and equally sized");
    for (const Arr* arr : {&a_, &b_, &c_}) {
      if (!arr->isFinite().all()) throw ValidationError("coefficient table: entries must be finite");
      if ((*arr < 0).any()) throw ValidationError("coefficient table: entries must be non-negative");
    }
  }

  static CoefficientTable zero(Index n) {
    return CoefficientTable(Arr::Zero(n, n), Arr::Zero(n, n), Arr::Zero(n, n));
  }

  Index size() const { return a_.rows(); }
  Scalar a(Index i, Index j) const { return a_(i, j); }
  Scalar b(Index i, Index j) const { return b_(i, j); }
  Scalar c(Index i, Index j) const { return c_(i, j); }

  void set_entry(Index i, Index j, Scalar a, Scalar b, Scalar c) {
    if (!(a >= 0) || !(b >= 0) || !(c >= 0) || !std::isfinite(static_cast<double>(a + b + c)))
      throw ValidationError("coefficient table: entries must be finite and non-negative");
    a_(i, j) = a;
    b_(i, j) = b;
    c_(i, j) = c;
  }

  Arr row_sums() const { return a_ + b_ + c_; }  // d_ij

  Scalar max_d(Index* arg_i = nullptr, Index* arg_j = nullptr) const {
    Index bi = 0, bj = 0;
    const Scalar d = row_sums().maxCoeff(&bi, &bj);
    if (arg_i) *arg_i = bi;
    if (arg_j) *arg_j = bj;
    return d;
  }

 private:
  Arr a_, b_, c_;
};

// Checks the summability condition and returns the contraction constant d.
// Indices in the error message are one-based to match the textual interface.
template <typename Scalar>
Scalar validate_alpha(const CoefficientTable<Scalar>& table) {
  Index i = 0, j = 0;
  const Scalar d = table.max_d(&i, &j);
  if (!(d < 1))
    throw ValidationError("coefficient table: d_" + std::to_string(i + 1) + std::to_string(j + 1) +
                          " = " + std::to_string(static_cast<double>(d)) +
                          " violates the requirement d < 1");
  return d;
}

// Sound coefficient synthesis for families of affine contractions: with
// L_i the exact spectral norm of f_i,
//   |f_i(f_j x) - f_i(f_j y)| <= L_i |f_j(x) - f_j(y)|,
// so c_ij = L_i, a_ij = b_ij = 0 always satisfies the inequality.
template <typename Scalar>
CoefficientTable<Scalar> synthesize_affine_coeffs(const std::vector<MapDescriptor<Scalar>>& maps,
                                                  const DomainBox<Scalar>& box) {
  if (maps.empty()) throw ValidationError("synthesize_affine_coeffs: need at least one map");
  const Index n = static_cast<Index>(maps.size());
  std::vector<Scalar> lips;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    if (!maps[k].is_affine())
      throw ValidationError("synthesize_affine_coeffs: map " + std::to_string(k + 1) +
                            " is not affine; coefficients for nonlinear maps must be supplied");
    const auto b = lipschitz_bound(maps[k], box);
    if (!(b.value < 1))
      throw ValidationError("synthesize_affine_coeffs: map " + std::to_string(k + 1) +
                            " has Lipschitz constant " + std::to_string(static_cast<double>(b.value)) +
                            " >= 1");
    lips.push_back(b.value);
  }
  auto table = CoefficientTable<Scalar>::zero(n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      table.set_entry(i, j, Scalar(0), Scalar(0), lips[static_cast<std::size_t>(i)]);
  return table;
}

// ---------------------------------------------------------------------------
// The system

template <typename Scalar>
class IFSSystem {
 public:
  IFSSystem(std::vector<MapDescriptor<Scalar>> maps, CoefficientTable<Scalar> table,
            DomainBox<Scalar> box)
      : maps_(std::move(maps)), table_(std::move(table)), box_(std::move(box)) {
    if (maps_.empty()) throw ValidationError("system: need at least one map");
    if (static_cast<Index>(maps_.size()) != table_.size())
      throw ValidationError("system: coefficient table size does not match the map family");
    for (std::size_t k = 0; k < maps_.size(); ++k) {
      if (maps_[k].dim() != box_.dim())
        throw DimensionMismatch("system: map " + std::to_string(k + 1) +
                                " dimension does not match the domain box");
      require_maps_box_into_itself(maps_[k], box_, "system map " + std::to_string(k + 1));
    }
    d_ = validate_alpha(table_);
  }

  Index size() const { return static_cast<Index>(maps_.size()); }
  Index dim() const { return box_.dim(); }
  const std::vector<MapDescriptor<Scalar>>& maps() const { return maps_; }
  const MapDescriptor<Scalar>& map(Index i) const { return maps_[static_cast<std::size_t>(i)]; }
  const CoefficientTable<Scalar>& table() const { return table_; }
  const DomainBox<Scalar>& box() const { return box_; }
  Scalar contraction_constant() const { return d_; }

 private:
  std::vector<MapDescriptor<Scalar>> maps_;
  CoefficientTable<Scalar> table_;
  DomainBox<Scalar> box_;
  Scalar d_;
};

template <typename Scalar>
void require_cloud_in_box(const IFSSystem<Scalar>& sys, const PointCloud<Scalar>& cloud,
                          const char* what) {
  require_cloud(cloud, what);
  if (cloud.cols() != sys.dim()) throw DimensionMismatch(std::string(what) + ": cloud dimension mismatch");
  const Scalar slack = Scalar(1e-12) * std::max<Scalar>(Scalar(1), sys.box().max_extent());
  for (Index i = 0; i < cloud.rows(); ++i) {
    const Point<Scalar> p = cloud.row(i).transpose();
    if (!sys.box().contains(p, slack))
      throw ValidationError(std::string(what) + ": point outside the domain box");
  }
}

// Set map: the union of the images of the cloud under every system map.
// Duplicates are kept; row order is map-major then point-major.
template <typename Scalar>
PointCloud<Scalar> hutchinson(const IFSSystem<Scalar>& sys, const PointCloud<Scalar>& cloud) {
  require_cloud_in_box(sys, cloud, "hutchinson");
  PointCloud<Scalar> out(cloud.rows() * sys.size(), cloud.cols());
  for (Index i = 0; i < sys.size(); ++i)
    out.middleRows(i * cloud.rows(), cloud.rows()) = apply(sys.map(i), cloud);
  return out;
}

// ---------------------------------------------------------------------------
// Falsifier for the pairwise contraction inequality.  Draws seeded uniform
// pairs from the box for every (i, j) and reports the worst violation found.
// Finding none is evidence, not proof.

template <typename Scalar>
struct BetaCounterexample {
  Index i, j;          // zero-based map indices (outer, inner)
  Point<Scalar> x, y;  // witness pair
  Scalar lhs, rhs;     // violated inequality sides
};

inline constexpr double kBetaSlack = 1e-12;

template <typename Scalar>
std::optional<BetaCounterexample<Scalar>> falsify_beta(const IFSSystem<Scalar>& sys,
                                                       long long samples, std::uint64_t seed) {
  if (samples < 1) throw ValidationError("falsify_beta: samples must be >= 1");
  std::mt19937_64 rng(seed);
  const auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const Index d = sys.dim();
  const auto draw = [&](Point<Scalar>& p) {
    for (Index c = 0; c < d; ++c)
      p(c) = sys.box().lo(c) + (sys.box().hi(c) - sys.box().lo(c)) * static_cast<Scalar>(unit());
  };

  std::optional<BetaCounterexample<Scalar>> worst;
  Scalar worst_margin = static_cast<Scalar>(kBetaSlack);
  Point<Scalar> x(d), y(d);
  for (Index i = 0; i < sys.size(); ++i) {
    for (Index j = 0; j < sys.size(); ++j) {
      for (long long s = 0; s < samples; ++s) {
        draw(x);
        draw(y);
        const Point<Scalar> fix = eval(sys.map(i), x), fiy = eval(sys.map(i), y);
        const Point<Scalar> fjx = eval(sys.map(j), x), fjy = eval(sys.map(j), y);
        const Scalar lhs = dist(eval(sys.map(i), fjx), eval(sys.map(i), fjy));
        const Scalar rhs = sys.table().a(i, j) * dist(x, y) + sys.table().b(i, j) * dist(fix, fiy) +
                           sys.table().c(i, j) * dist(fjx, fjy);
        if (lhs - rhs > worst_margin) {
          worst_margin = lhs - rhs;
          worst = BetaCounterexample<Scalar>{i, j, x, y, lhs, rhs};
        }
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Convergence-rate certificate.  With x_n(Y, Z) the sup over length-n words
// of the sup metric between word images, the iteration satisfies
//
//   h(F^n(B), A) <= d^floor(n/2) / (1 - d) * (x_0(B, F(B)) + x_1(B, F(B))).
//
// Both x_0 and x_1 are exact on finite clouds and cheap.

template <typename Scalar>
Scalar rate_certificate(const IFSSystem<Scalar>& sys, const PointCloud<Scalar>& b0, long long n) {
  if (n < 0) throw ValidationError("rate_certificate: n must be >= 0");
  require_cloud_in_box(sys, b0, "rate_certificate");
  const PointCloud<Scalar> fb = hutchinson(sys, b0);
  const Scalar x0 = delta_sup(b0, fb);
  Scalar x1 = 0;
  for (Index i = 0; i < sys.size(); ++i)
    x1 = std::max(x1, delta_sup(apply(sys.map(i), b0), apply(sys.map(i), fb)));
  const Scalar d = sys.contraction_constant();
  return std::pow(d, static_cast<Scalar>(n / 2)) / (1 - d) * (x0 + x1);
}

// ---------------------------------------------------------------------------
// Attractor iteration: B_{n+1} = decimate(F(B_n), eps) until the step gap
// h(B_n, B_{n+1}) drops to tol.  The reported certificate bounds the distance
// of the undecimated iterate to the attractor; decimation error is accounted
// separately (eps per step, summed) and never folded in silently.

template <typename Scalar>
struct AttractorResult {
  PointCloud<Scalar> cloud;
  long long iterations;
  Scalar step_gap;
  Scalar rate_bound;
  Scalar decimation_budget;
};

template <typename Scalar>
AttractorResult<Scalar> attractor(const IFSSystem<Scalar>& sys, const PointCloud<Scalar>& b0,
                                  Scalar tol, Scalar eps_decimate, long long max_iter) {
  if (!(tol > 0)) throw ValidationError("attractor: tol must be positive");
  if (!(eps_decimate >= 0)) throw ValidationError("attractor: eps_decimate must be >= 0");
  if (max_iter < 1) throw ValidationError("attractor: max_iter must be >= 1");
  require_cloud_in_box(sys, b0, "attractor");

  // x_0, x_1 of the starting cloud; fixed for the whole run.
  const PointCloud<Scalar> fb0 = hutchinson(sys, b0);
  const Scalar x0 = delta_sup(b0, fb0);
  Scalar x1 = 0;
  for (Index i = 0; i < sys.size(); ++i)
    x1 = std::max(x1, delta_sup(apply(sys.map(i), b0), apply(sys.map(i), fb0)));
  const Scalar d = sys.contraction_constant();

  PointCloud<Scalar> current = b0;
  Scalar budget = 0;
  Scalar gap = std::numeric_limits<Scalar>::infinity();
  for (long long n = 1; n <= max_iter; ++n) {
    PointCloud<Scalar> next = decimate(hutchinson(sys, current), eps_decimate);
    budget += eps_decimate;
    gap = hausdorff(current, next);
    current = std::move(next);
    if (gap <= tol) {
      const Scalar bound = std::pow(d, static_cast<Scalar>(n / 2)) / (1 - d) * (x0 + x1);
      return {std::move(current), n, gap, bound, budget};
    }
  }
  throw ConvergenceError("attractor: step gap " + std::to_string(static_cast<double>(gap)) +
                             " above tol after " + std::to_string(max_iter) + " iterations",
                         max_iter, static_cast<double>(gap),
                         current.template cast<double>());
}

// ---------------------------------------------------------------------------
// Diagnostic sequences from the convergence proof:
//   x_n(Y, Z) = sup over length-n words w of delta_sup(f_w(Y), f_w(Z)),
//   y_n       = max(x_{n-1}, x_n).
// Words are enumerated exhaustively (depth-capped); nothing is sampled.

template <typename Scalar>
struct Diagnostics {
  std::vector<Scalar> x;  // x[k], k = 0..n_max

  Scalar y(std::size_t k) const {
    if (k < 1 || k >= x.size())
      throw ValidationError("diagnostics: y_k defined for 1 <= k <= n_max");
    return std::max(x[k - 1], x[k]);
  }
};

inline constexpr long long kWordEnumerationBudget = 1LL << 25;

template <typename Scalar>
void diagnostics_check_budget(Index branching, int n_max) {
  long long nodes = 1, level = 1;
  for (int k = 1; k <= n_max; ++k) {
    level *= branching;
    nodes += level;
    if (nodes > kWordEnumerationBudget)
      throw BudgetError("word enumeration budget exceeded at depth " + std::to_string(k) +
                        "; reduce n_max");
  }
}

namespace detail {

template <typename Scalar>
void diagnostics_dfs(const IFSSystem<Scalar>& sys, const PointCloud<Scalar>& yw,
                     const PointCloud<Scalar>& zw, int depth, int n_max,
                     std::vector<Scalar>& x) {
  x[static_cast<std::size_t>(depth)] =
      std::max(x[static_cast<std::size_t>(depth)], delta_sup(yw, zw));
  if (depth == n_max) return;
  for (Index i = 0; i < sys.size(); ++i)
    diagnostics_dfs(sys, PointCloud<Scalar>(apply(sys.map(i), yw)),
                    PointCloud<Scalar>(apply(sys.map(i), zw)), depth + 1, n_max, x);
}

}  // namespace detail

template <typename Scalar>
Diagnostics<Scalar> diagnostics_xy(const IFSSystem<Scalar>& sys, const PointCloud<Scalar>& y,
                                   const PointCloud<Scalar>& z, int n_max) {
  if (n_max < 0) throw ValidationError("diagnostics_xy: n_max must be >= 0");
  require_cloud_in_box(sys, y, "diagnostics_xy");
  require_cloud_in_box(sys, z, "diagnostics_xy");
  diagnostics_check_budget<Scalar>(sys.size(), n_max);
  Diagnostics<Scalar> out;
  out.x.assign(static_cast<std::size_t>(n_max) + 1, Scalar(0));
  detail::diagnostics_dfs(sys, y, z, 0, n_max, out.x);
  return out;
}

}  // namespace cvxifs
