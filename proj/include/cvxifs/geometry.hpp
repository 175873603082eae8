#pragma once

// Finite point clouds as stand-ins for non-empty compact sets, with the
// Hausdorff-Pompeiu metric, the sup metric, diameters and deterministic
// decimation.  Clouds are dense Eigen matrices, one point per row.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "cvxifs/errors.hpp"

namespace cvxifs {

using Index = Eigen::Index;

template <typename Scalar>
using PointCloud = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Point = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Optional data parallelism.  All parallel reductions below are max-folds of
// independently computed per-row values, so results are bitwise identical to
// the serial loop for any thread count.

inline int& detail_thread_slot() {
  static int n = 1;
  return n;
}

inline void set_threads(int n) { detail_thread_slot() = std::max(1, n); }
inline int threads() { return detail_thread_slot(); }

namespace detail {

// Applies fn(begin, end) over chunks of [0, n) and max-folds the results.
template <typename Scalar, typename Fn>
Scalar parallel_max(Index n, Fn&& fn) {
  const int nt = std::min<Index>(threads(), n) > 1 ? static_cast<int>(std::min<Index>(threads(), n)) : 1;
  if (nt == 1) return fn(Index{0}, n);
  std::vector<Scalar> partial(static_cast<std::size_t>(nt));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nt));
  const Index chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    const Index lo = t * chunk;
    const Index hi = std::min(n, lo + chunk);
    pool.emplace_back([&, t, lo, hi] { partial[static_cast<std::size_t>(t)] = lo < hi ? fn(lo, hi) : -std::numeric_limits<Scalar>::infinity(); });
  }
  for (auto& th : pool) th.join();
  Scalar best = partial[0];
  for (std::size_t t = 1; t < partial.size(); ++t) best = std::max(best, partial[t]);
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Basic checks

template <typename Scalar>
void require_cloud(const PointCloud<Scalar>& a, const char* what) {
  if (a.rows() == 0 || a.cols() == 0)
    throw ValidationError(std::string(what) + ": point cloud must be non-empty");
}

template <typename Scalar>
void require_same_dim(const PointCloud<Scalar>& a, const PointCloud<Scalar>& b,
                      const char* what) {
  if (a.cols() != b.cols())
    throw DimensionMismatch(std::string(what) + ": dimension mismatch (" +
                            std::to_string(a.cols()) + " vs " +
                            std::to_string(b.cols()) + ")");
}

// Euclidean distance between two points (any vector-shaped expressions).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar dist(const Eigen::MatrixBase<DerivedA>& p,
                               const Eigen::MatrixBase<DerivedB>& q) {
  if (p.size() != q.size())
    throw DimensionMismatch("dist: dimension mismatch (" +
                            std::to_string(p.size()) + " vs " +
                            std::to_string(q.size()) + ")");
  return (p.reshaped() - q.reshaped()).norm();
}

namespace detail {

// The one arithmetic definition of a point-to-point distance used by every
// code path (brute force and indexed), so accelerated results are bitwise
// equal to the brute-force ones.
template <typename RowA, typename RowB>
typename RowA::Scalar row_dist(const Eigen::MatrixBase<RowA>& a,
                               const Eigen::MatrixBase<RowB>& b) {
  return (a - b).norm();
}

template <typename Scalar>
Scalar directed_brute(const PointCloud<Scalar>& a, const PointCloud<Scalar>& b) {
  return parallel_max<Scalar>(a.rows(), [&](Index lo, Index hi) {
    Scalar worst = 0;
    for (Index i = lo; i < hi; ++i) {
      Scalar best = std::numeric_limits<Scalar>::infinity();
      for (Index j = 0; j < b.rows(); ++j)
        best = std::min(best, row_dist(a.row(i), b.row(j)));
      worst = std::max(worst, best);
    }
    return worst;
  });
}

// Uniform grid over the rows of `pts`; cells indexed per axis, CSR layout.
template <typename Scalar>
struct UniformGrid {
  const PointCloud<Scalar>& pts;
  int dim;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> lo;
  Scalar cell = 0;
  std::array<Index, 3> ncells{1, 1, 1};
  std::vector<Index> offsets;  // size ncell_total + 1
  std::vector<Index> items;    // row indices bucketed by cell

  explicit UniformGrid(const PointCloud<Scalar>& p) : pts(p), dim(static_cast<int>(p.cols())) {
    lo = p.colwise().minCoeff().transpose().array();
    const auto hi = p.colwise().maxCoeff().transpose().array().eval();
    const Scalar extent = (hi - lo).maxCoeff();
    // Aim for O(1) points per cell while keeping the total cell count sane.
    const Index axis_cap = dim == 1 ? (Index{1} << 21) : dim == 2 ? 4096 : 256;
    const Index per_axis = std::clamp<Index>(
        static_cast<Index>(std::ceil(std::pow(static_cast<double>(p.rows()), 1.0 / dim))), 1,
        axis_cap);
    cell = extent > 0 ? extent / static_cast<Scalar>(per_axis) : Scalar(0);
    if (cell <= 0) return;  // degenerate: all points coincide per axis
    Index total = 1;
    for (int c = 0; c < dim; ++c) {
      ncells[static_cast<std::size_t>(c)] =
          std::clamp<Index>(static_cast<Index>((hi(c) - lo(c)) / cell) + 1, 1, per_axis + 1);
      total *= ncells[static_cast<std::size_t>(c)];
    }
    std::vector<Index> cell_of(static_cast<std::size_t>(p.rows()));
    offsets.assign(static_cast<std::size_t>(total) + 1, 0);
    for (Index i = 0; i < p.rows(); ++i) {
      const Index id = cell_id(coords_of(p.row(i)));
      cell_of[static_cast<std::size_t>(i)] = id;
      ++offsets[static_cast<std::size_t>(id) + 1];
    }
    for (std::size_t k = 1; k < offsets.size(); ++k) offsets[k] += offsets[k - 1];
    items.resize(static_cast<std::size_t>(p.rows()));
    std::vector<Index> cursor(offsets.begin(), offsets.end() - 1);
    for (Index i = 0; i < p.rows(); ++i)
      items[static_cast<std::size_t>(cursor[static_cast<std::size_t>(cell_of[static_cast<std::size_t>(i)])]++)] = i;
  }

  bool usable() const { return cell > 0; }

  template <typename Row>
  std::array<Index, 3> coords_of(const Eigen::MatrixBase<Row>& q) const {
    std::array<Index, 3> k{0, 0, 0};
    for (int c = 0; c < dim; ++c) {
      const Scalar t = (q(c) - lo(c)) / cell;
      k[static_cast<std::size_t>(c)] =
          std::clamp<Index>(static_cast<Index>(std::floor(t)), 0, ncells[static_cast<std::size_t>(c)] - 1);
    }
    return k;
  }

  Index cell_id(const std::array<Index, 3>& k) const {
    Index id = 0;
    for (int c = dim - 1; c >= 0; --c) id = id * ncells[static_cast<std::size_t>(c)] + k[static_cast<std::size_t>(c)];
    return id;
  }

  // Exact nearest distance from q to the indexed cloud: expanding Chebyshev
  // rings; any point in a ring-k cell is at least (k-1)*cell away, so the
  // scan stops only when no unscanned cell can beat the current best.
  template <typename Row>
  Scalar nearest(const Eigen::MatrixBase<Row>& q) const {
    const auto home = coords_of(q);
    Index max_ring = 0;
    for (int c = 0; c < dim; ++c)
      max_ring = std::max(max_ring, std::max(home[static_cast<std::size_t>(c)],
                                             ncells[static_cast<std::size_t>(c)] - 1 - home[static_cast<std::size_t>(c)]));
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index r = 0; r <= max_ring; ++r) {
      if (r >= 1 && best <= static_cast<Scalar>(r - 1) * cell) break;
      scan_ring(q, home, r, best);
    }
    return best;
  }

 private:
  template <typename Row>
  void scan_ring(const Eigen::MatrixBase<Row>& q, const std::array<Index, 3>& home,
                 Index r, Scalar& best) const {
    std::array<Index, 3> k{0, 0, 0};
    std::array<Index, 3> from{0, 0, 0}, to{0, 0, 0};
    for (int c = 0; c < dim; ++c) {
      from[static_cast<std::size_t>(c)] = std::max<Index>(0, home[static_cast<std::size_t>(c)] - r);
      to[static_cast<std::size_t>(c)] = std::min<Index>(ncells[static_cast<std::size_t>(c)] - 1, home[static_cast<std::size_t>(c)] + r);
    }
    const auto visit = [&](const std::array<Index, 3>& cc) {
      Index cheb = 0;
      for (int c = 0; c < dim; ++c) cheb = std::max(cheb, std::abs(cc[static_cast<std::size_t>(c)] - home[static_cast<std::size_t>(c)]));
      if (cheb != r) return;
      const Index id = cell_id(cc);
      for (Index s = offsets[static_cast<std::size_t>(id)]; s < offsets[static_cast<std::size_t>(id) + 1]; ++s)
        best = std::min(best, row_dist(q, pts.row(items[static_cast<std::size_t>(s)])));
    };
    if (dim == 1) {
      for (k[0] = from[0]; k[0] <= to[0]; ++k[0]) visit(k);
    } else if (dim == 2) {
      for (k[1] = from[1]; k[1] <= to[1]; ++k[1])
        for (k[0] = from[0]; k[0] <= to[0]; ++k[0]) visit(k);
    } else {
      for (k[2] = from[2]; k[2] <= to[2]; ++k[2])
        for (k[1] = from[1]; k[1] <= to[1]; ++k[1])
          for (k[0] = from[0]; k[0] <= to[0]; ++k[0]) visit(k);
    }
  }
};

template <typename Scalar>
Scalar directed_grid(const PointCloud<Scalar>& a, const PointCloud<Scalar>& b) {
  if (b.cols() > 3) return directed_brute(a, b);
  UniformGrid<Scalar> grid(b);
  if (!grid.usable()) return directed_brute(a, b);
  return parallel_max<Scalar>(a.rows(), [&](Index lo, Index hi) {
    Scalar worst = 0;
    for (Index i = lo; i < hi; ++i) worst = std::max(worst, grid.nearest(a.row(i)));
    return worst;
  });
}

template <typename Scalar>
bool grid_pays_off(const PointCloud<Scalar>& a, const PointCloud<Scalar>& b) {
  return b.cols() <= 3 && b.rows() >= 256 &&
         static_cast<double>(a.rows()) * static_cast<double>(b.rows()) > 4e6;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Metrics

// Directed distance d(A,B) = sup_{x in A} inf_{y in B} |x-y|.
template <typename Scalar>
Scalar directed_hausdorff(const PointCloud<Scalar>& a, const PointCloud<Scalar>& b) {
  require_cloud(a, "directed_hausdorff");
  require_cloud(b, "directed_hausdorff");
  require_same_dim(a, b, "directed_hausdorff");
  if (detail::grid_pays_off(a, b)) return detail::directed_grid(a, b);
  return detail::directed_brute(a, b);
}

// Hausdorff-Pompeiu distance max(d(A,B), d(B,A)), exact on finite clouds.
template <typename Scalar>
Scalar hausdorff(const PointCloud<Scalar>& a, const PointCloud<Scalar>& b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

// Sup metric: the largest pairwise distance between the clouds.  Dominates
// hausdorff for every pair.
template <typename Scalar>
Scalar delta_sup(const PointCloud<Scalar>& a, const PointCloud<Scalar>& b) {
  require_cloud(a, "delta_sup");
  require_cloud(b, "delta_sup");
  require_same_dim(a, b, "delta_sup");
  if (a.cols() == 1) {
    // Extremal pair in 1D is (max, min) one way or the other.
    Index ia_max, ia_min, ib_max, ib_min;
    a.col(0).maxCoeff(&ia_max);
    a.col(0).minCoeff(&ia_min);
    b.col(0).maxCoeff(&ib_max);
    b.col(0).minCoeff(&ib_min);
    return std::max(detail::row_dist(a.row(ia_max), b.row(ib_min)),
                    detail::row_dist(a.row(ia_min), b.row(ib_max)));
  }
  return detail::parallel_max<Scalar>(a.rows(), [&](Index lo, Index hi) {
    Scalar worst = 0;
    for (Index i = lo; i < hi; ++i)
      for (Index j = 0; j < b.rows(); ++j)
        worst = std::max(worst, detail::row_dist(a.row(i), b.row(j)));
    return worst;
  });
}

template <typename Scalar>
Scalar diameter(const PointCloud<Scalar>& a) {
  require_cloud(a, "diameter");
  if (a.rows() == 1) return Scalar(0);
  return delta_sup(a, a);
}

// Expression-friendly overloads.
template <typename DA, typename DB>
auto hausdorff(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  using S = typename DA::Scalar;
  return hausdorff(PointCloud<S>(a.derived()), PointCloud<S>(b.derived()));
}

template <typename DA, typename DB>
auto delta_sup(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  using S = typename DA::Scalar;
  return delta_sup(PointCloud<S>(a.derived()), PointCloud<S>(b.derived()));
}

template <typename DA>
auto diameter(const Eigen::MatrixBase<DA>& a) {
  using S = typename DA::Scalar;
  return diameter(PointCloud<S>(a.derived()));
}

// ---------------------------------------------------------------------------
// Decimation: greedy first-fit eps-net in input order.  Returns a subset S of
// A (original row order) with hausdorff(A, S) <= eps.  eps = 0 removes exact
// duplicates only.  Deterministic for a fixed input order.

namespace detail {

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

template <typename Scalar>
std::uint64_t row_key(const PointCloud<Scalar>& a, Index i) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Index c = 0; c < a.cols(); ++c) {
    const double v = static_cast<double>(a(i, c)) + 0.0;  // normalize -0.0
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = hash_mix(h, bits);
  }
  return h;
}

}  // namespace detail

template <typename Scalar>
PointCloud<Scalar> decimate(const PointCloud<Scalar>& a, Scalar eps) {
  require_cloud(a, "decimate");
  if (!(eps >= 0) || !std::isfinite(static_cast<double>(eps)))
    throw ValidationError("decimate: eps must be finite and >= 0");

  const Index n = a.rows();
  const int dim = static_cast<int>(a.cols());
  std::vector<Index> kept;
  kept.reserve(static_cast<std::size_t>(n));

  if (eps == Scalar(0)) {
    // Exact duplicate removal; hash buckets verified by coordinate equality.
    std::unordered_map<std::uint64_t, std::vector<Index>> seen;
    for (Index i = 0; i < n; ++i) {
      auto& bucket = seen[detail::row_key(a, i)];
      bool dup = false;
      for (Index j : bucket)
        if (a.row(i) == a.row(j)) { dup = true; break; }
      if (!dup) {
        bucket.push_back(i);
        kept.push_back(i);
      }
    }
  } else {
    if (dim > 8) throw ValidationError("decimate: dimension must be <= 8");
    std::unordered_map<std::uint64_t, std::vector<Index>> cells;
    std::array<std::int64_t, 8> cc{};
    const auto cell_key = [&](const std::array<std::int64_t, 8>& k) {
      std::uint64_t h = 1469598103934665603ULL;
      for (int c = 0; c < dim; ++c) h = detail::hash_mix(h, static_cast<std::uint64_t>(k[static_cast<std::size_t>(c)]));
      return h;
    };
    std::array<std::int64_t, 8> nb{};
    for (Index i = 0; i < n; ++i) {
      for (int c = 0; c < dim; ++c) {
        const double q = std::floor(static_cast<double>(a(i, c)) / static_cast<double>(eps));
        if (!(std::abs(q) < 4.6e18))
          throw ValidationError("decimate: eps too small relative to coordinate magnitudes");
        cc[static_cast<std::size_t>(c)] = static_cast<std::int64_t>(q);
      }
      // Scan the 3^dim neighbourhood; cell size == eps guarantees coverage.
      bool covered = false;
      std::array<int, 8> off{};
      off.fill(-1);
      while (!covered) {
        for (int c = 0; c < dim; ++c) nb[static_cast<std::size_t>(c)] = cc[static_cast<std::size_t>(c)] + off[static_cast<std::size_t>(c)];
        if (auto it = cells.find(cell_key(nb)); it != cells.end()) {
          for (Index j : it->second) {
            if (detail::row_dist(a.row(i), a.row(j)) <= eps) { covered = true; break; }
          }
        }
        int c = 0;
        for (; c < dim; ++c) {
          if (off[static_cast<std::size_t>(c)] < 1) { ++off[static_cast<std::size_t>(c)]; break; }
          off[static_cast<std::size_t>(c)] = -1;
        }
        if (c == dim) break;
      }
      if (!covered) {
        cells[cell_key(cc)].push_back(i);
        kept.push_back(i);
      }
    }
  }

  PointCloud<Scalar> out(static_cast<Index>(kept.size()), a.cols());
  for (std::size_t r = 0; r < kept.size(); ++r) out.row(static_cast<Index>(r)) = a.row(kept[r]);
  return out;
}

}  // namespace cvxifs
