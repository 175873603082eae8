#pragma once

// Closed-form self-maps of a box domain: affine maps, 1D polynomials and
// their compositions.  Word-indexed composition follows the convention that
// the word "abc" denotes a after b after c, i.e. the first symbol acts last.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "cvxifs/errors.hpp"
#include "cvxifs/geometry.hpp"

namespace cvxifs {

template <typename Scalar>
struct MapDescriptor;

// x -> A x + b
template <typename Scalar>
struct AffineMap {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> linear;
  Point<Scalar> offset;
};

// 1D polynomial, ascending coefficients: c0 + c1 x + c2 x^2 + ...
template <typename Scalar>
struct Poly1DMap {
  std::vector<Scalar> coeffs;
};

// parts[0] o parts[1] o ... o parts.back()  (the last part acts first)
template <typename Scalar>
struct CompositeMap {
  std::vector<MapDescriptor<Scalar>> parts;
};

template <typename Scalar>
struct MapDescriptor {
  std::variant<AffineMap<Scalar>, Poly1DMap<Scalar>, CompositeMap<Scalar>> node;

  static MapDescriptor affine(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a,
                              Point<Scalar> b) {
    if (a.rows() != a.cols() || a.rows() == 0 || a.rows() != b.size())
      throw ValidationError("affine map: matrix must be square and match the offset size");
    if (!a.allFinite() || !b.allFinite())
      throw ValidationError("affine map: entries must be finite");
    return MapDescriptor{AffineMap<Scalar>{std::move(a), std::move(b)}};
  }

  static MapDescriptor scalar_affine(Scalar slope, Scalar intercept) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a(1, 1);
    a(0, 0) = slope;
    Point<Scalar> b(1);
    b(0) = intercept;
    return affine(std::move(a), std::move(b));
  }

  static MapDescriptor poly1d(std::vector<Scalar> coeffs) {
    if (coeffs.empty()) throw ValidationError("poly1d map: coefficient list must be non-empty");
    for (Scalar c : coeffs)
      if (!std::isfinite(static_cast<double>(c)))
        throw ValidationError("poly1d map: coefficients must be finite");
    return MapDescriptor{Poly1DMap<Scalar>{std::move(coeffs)}};
  }

  static MapDescriptor composite(std::vector<MapDescriptor> parts) {
    if (parts.empty()) throw ValidationError("composite map: part list must be non-empty");
    return MapDescriptor{CompositeMap<Scalar>{std::move(parts)}};
  }

  bool is_affine() const { return std::holds_alternative<AffineMap<Scalar>>(node); }
  bool is_poly1d() const { return std::holds_alternative<Poly1DMap<Scalar>>(node); }
  bool is_composite() const { return std::holds_alternative<CompositeMap<Scalar>>(node); }

  Index dim() const {
    if (auto* a = std::get_if<AffineMap<Scalar>>(&node)) return a->linear.rows();
    if (std::holds_alternative<Poly1DMap<Scalar>>(node)) return 1;
    return std::get<CompositeMap<Scalar>>(node).parts.front().dim();
  }
};

// ---------------------------------------------------------------------------
// Evaluation

template <typename Scalar>
Point<Scalar> eval(const MapDescriptor<Scalar>& f, const Point<Scalar>& x) {
  if (x.size() != f.dim())
    throw DimensionMismatch("eval: point dimension " + std::to_string(x.size()) +
                            " does not match map dimension " + std::to_string(f.dim()));
  if (auto* a = std::get_if<AffineMap<Scalar>>(&f.node)) return a->linear * x + a->offset;
  if (auto* p = std::get_if<Poly1DMap<Scalar>>(&f.node)) {
    Scalar acc = 0;
    for (auto it = p->coeffs.rbegin(); it != p->coeffs.rend(); ++it) acc = acc * x(0) + *it;
    Point<Scalar> out(1);
    out(0) = acc;
    return out;
  }
  const auto& parts = std::get<CompositeMap<Scalar>>(f.node).parts;
  Point<Scalar> y = x;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) y = eval(*it, y);
  return y;
}

// Whole-cloud application, one point per row.
template <typename Scalar>
PointCloud<Scalar> apply(const MapDescriptor<Scalar>& f, const PointCloud<Scalar>& cloud) {
  if (cloud.cols() != f.dim())
    throw DimensionMismatch("apply: cloud dimension does not match map dimension");
  if (auto* a = std::get_if<AffineMap<Scalar>>(&f.node))
    return (cloud * a->linear.transpose()).rowwise() + a->offset.transpose();
  if (auto* p = std::get_if<Poly1DMap<Scalar>>(&f.node)) {
    PointCloud<Scalar> out = PointCloud<Scalar>::Zero(cloud.rows(), 1);
    for (auto it = p->coeffs.rbegin(); it != p->coeffs.rend(); ++it)
      out = (out.array() * cloud.array() + *it).matrix();
    return out;
  }
  const auto& parts = std::get<CompositeMap<Scalar>>(f.node).parts;
  PointCloud<Scalar> y = cloud;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) y = apply(*it, y);
  return y;
}

// ---------------------------------------------------------------------------
// Word-indexed composition: compose_word(maps, {i1, i2, ..., in}) is
// maps[i1] o maps[i2] o ... o maps[in].  Symbols are zero-based indices.

template <typename Scalar>
MapDescriptor<Scalar> compose_word(const std::vector<MapDescriptor<Scalar>>& family,
                                   const std::vector<int>& word) {
  if (word.empty())
    throw ValidationError("compose_word: the empty word has no composite (identity is not represented)");
  std::vector<MapDescriptor<Scalar>> parts;
  parts.reserve(word.size());
  for (int s : word) {
    if (s < 0 || static_cast<std::size_t>(s) >= family.size())
      throw ValidationError("compose_word: symbol " + std::to_string(s + 1) +
                            " does not index a map (family size " +
                            std::to_string(family.size()) + ")");
    parts.push_back(family[static_cast<std::size_t>(s)]);
  }
  if (parts.size() == 1) return parts.front();
  return MapDescriptor<Scalar>::composite(std::move(parts));
}

// ---------------------------------------------------------------------------
// Closed-form flattening of compositions: affine chains multiply out in any
// dimension; in 1D any mix of affine and polynomial parts composes into a
// single polynomial.  Returns nothing when the closed form is unavailable or
// the degree would explode.

namespace detail {

template <typename Scalar>
std::vector<Scalar> poly_mul(const std::vector<Scalar>& a, const std::vector<Scalar>& b) {
  std::vector<Scalar> r(a.size() + b.size() - 1, Scalar(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

// outer(inner(x)) by Horner over polynomials
template <typename Scalar>
std::vector<Scalar> poly_compose(const std::vector<Scalar>& outer,
                                 const std::vector<Scalar>& inner) {
  std::vector<Scalar> r{outer.back()};
  for (std::size_t k = outer.size() - 1; k-- > 0;) {
    r = poly_mul(r, inner);
    r[0] += outer[k];
  }
  return r;
}

}  // namespace detail

inline constexpr std::size_t kFlattenDegreeCap = 64;

template <typename Scalar>
std::optional<MapDescriptor<Scalar>> flatten(const MapDescriptor<Scalar>& f) {
  if (!f.is_composite()) return f;
  const auto& parts = std::get<CompositeMap<Scalar>>(f.node).parts;

  if (f.dim() == 1) {
    const auto as_poly = [](const MapDescriptor<Scalar>& m) -> std::optional<std::vector<Scalar>> {
      const auto flat = flatten(m);
      if (!flat) return std::nullopt;
      if (flat->is_poly1d()) return std::get<Poly1DMap<Scalar>>(flat->node).coeffs;
      if (flat->is_affine()) {
        const auto& a = std::get<AffineMap<Scalar>>(flat->node);
        return std::vector<Scalar>{a.offset(0), a.linear(0, 0)};
      }
      return std::nullopt;
    };
    auto acc = as_poly(parts.back());
    if (!acc) return std::nullopt;
    for (std::size_t k = parts.size() - 1; k-- > 0;) {
      const auto outer = as_poly(parts[k]);
      if (!outer) return std::nullopt;
      if ((outer->size() - 1) * (acc->size() - 1) + 1 > kFlattenDegreeCap) return std::nullopt;
      acc = detail::poly_compose(*outer, *acc);
    }
    return MapDescriptor<Scalar>::poly1d(std::move(*acc));
  }

  // multi-dimensional: affine chain or nothing
  auto tail = flatten(parts.back());
  if (!tail || !tail->is_affine()) return std::nullopt;
  auto acc = std::get<AffineMap<Scalar>>(tail->node);
  for (std::size_t k = parts.size() - 1; k-- > 0;) {
    const auto head = flatten(parts[k]);
    if (!head || !head->is_affine()) return std::nullopt;
    const auto& h = std::get<AffineMap<Scalar>>(head->node);
    acc.offset = h.linear * acc.offset + h.offset;
    acc.linear = (h.linear * acc.linear).eval();
  }
  return MapDescriptor<Scalar>::affine(std::move(acc.linear), std::move(acc.offset));
}

// ---------------------------------------------------------------------------
// Domain box

template <typename Scalar>
struct DomainBox {
  Point<Scalar> lo, hi;

  DomainBox(Point<Scalar> l, Point<Scalar> h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo.size() == 0 || lo.size() != hi.size())
      throw ValidationError("domain box: lo and hi must be non-empty and of equal dimension");
    if (!lo.allFinite() || !hi.allFinite()) throw ValidationError("domain box: bounds must be finite");
    if (!((lo.array() < hi.array()).all()))
      throw ValidationError("domain box: lo must be strictly below hi componentwise");
    if (lo.size() > 8) throw ValidationError("domain box: dimension must be at most 8");
  }

  Index dim() const { return lo.size(); }
  Point<Scalar> center() const { return ((lo + hi) / Scalar(2)).eval(); }
  Scalar max_extent() const { return (hi - lo).maxCoeff(); }

  bool contains(const Point<Scalar>& x, Scalar slack = 0) const {
    return (x.array() >= lo.array() - slack).all() && (x.array() <= hi.array() + slack).all();
  }
};

// Deterministic probe cloud: all corners, a per-axis lattice, and seeded
// uniform samples.  Used for validating that maps keep the box invariant.
template <typename Scalar>
PointCloud<Scalar> box_probe_points(const DomainBox<Scalar>& box, Index lattice_budget = 4096,
                                    Index random_count = 512, std::uint64_t seed = 0x5eed) {
  const Index d = box.dim();
  std::vector<Point<Scalar>> pts;
  const Index corners = Index{1} << d;
  for (Index m = 0; m < corners; ++m) {
    Point<Scalar> p(d);
    for (Index c = 0; c < d; ++c) p(c) = (m >> c) & 1 ? box.hi(c) : box.lo(c);
    pts.push_back(std::move(p));
  }
  Index per_axis = 2;
  while (std::pow(static_cast<double>(per_axis + 1), static_cast<double>(d)) <= static_cast<double>(lattice_budget))
    ++per_axis;
  const Index lattice_total = static_cast<Index>(std::llround(std::pow(static_cast<double>(per_axis), static_cast<double>(d))));
  for (Index m = 0; m < lattice_total; ++m) {
    Index rest = m;
    Point<Scalar> p(d);
    for (Index c = 0; c < d; ++c) {
      const Index k = rest % per_axis;
      rest /= per_axis;
      p(c) = box.lo(c) + (box.hi(c) - box.lo(c)) * static_cast<Scalar>(k) / static_cast<Scalar>(per_axis - 1);
    }
    pts.push_back(std::move(p));
  }
  std::mt19937_64 rng(seed);
  const auto unit = [&rng] { return static_cast<Scalar>(static_cast<double>(rng() >> 11) * 0x1.0p-53); };
  for (Index m = 0; m < random_count; ++m) {
    Point<Scalar> p(d);
    for (Index c = 0; c < d; ++c) p(c) = box.lo(c) + (box.hi(c) - box.lo(c)) * unit();
    pts.push_back(std::move(p));
  }
  PointCloud<Scalar> out(static_cast<Index>(pts.size()), d);
  for (std::size_t i = 0; i < pts.size(); ++i) out.row(static_cast<Index>(i)) = pts[i].transpose();
  return out;
}

// Numerical check that f(box) stays inside box on a dense probe sample.
template <typename Scalar>
void require_maps_box_into_itself(const MapDescriptor<Scalar>& f, const DomainBox<Scalar>& box,
                                  const std::string& label = "map") {
  if (f.dim() != box.dim())
    throw DimensionMismatch(label + ": map dimension does not match the domain box");
  const PointCloud<Scalar> probe = box_probe_points(box);
  const PointCloud<Scalar> image = apply(f, probe);
  const Scalar slack = Scalar(1e-12) * std::max<Scalar>(Scalar(1), box.max_extent());
  for (Index i = 0; i < image.rows(); ++i) {
    const Point<Scalar> y = image.row(i).transpose();
    if (!box.contains(y, slack))
      throw ValidationError(label + ": image of a probe point leaves the domain box");
  }
}

// ---------------------------------------------------------------------------
// Lipschitz bounds on the box.  Affine bounds are exact spectral norms;
// polynomial bounds are dense-sample estimates of sup |p'| and are flagged as
// inexact.  Composite bounds multiply component bounds.

template <typename Scalar>
struct LipschitzBound {
  Scalar value;
  bool exact;
};

template <typename Scalar>
Scalar spectral_norm(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m) {
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(m);
  return svd.singularValues()(0);
}

template <typename Scalar>
std::vector<Scalar> poly_derivative(const std::vector<Scalar>& coeffs) {
  std::vector<Scalar> d;
  for (std::size_t k = 1; k < coeffs.size(); ++k)
    d.push_back(static_cast<Scalar>(k) * coeffs[k]);
  if (d.empty()) d.push_back(Scalar(0));
  return d;
}

inline constexpr Index kLipschitzSamples = 20001;

template <typename Scalar>
LipschitzBound<Scalar> lipschitz_bound(const MapDescriptor<Scalar>& f, const DomainBox<Scalar>& box) {
  if (auto* a = std::get_if<AffineMap<Scalar>>(&f.node))
    return {spectral_norm(a->linear), true};
  if (auto* p = std::get_if<Poly1DMap<Scalar>>(&f.node)) {
    if (box.dim() != 1) throw DimensionMismatch("lipschitz_bound: poly1d map needs a 1D box");
    const auto deriv = poly_derivative(p->coeffs);
    Scalar worst = 0;
    for (Index k = 0; k < kLipschitzSamples; ++k) {
      const Scalar x = box.lo(0) + (box.hi(0) - box.lo(0)) * static_cast<Scalar>(k) /
                                       static_cast<Scalar>(kLipschitzSamples - 1);
      Scalar acc = 0;
      for (auto it = deriv.rbegin(); it != deriv.rend(); ++it) acc = acc * x + *it;
      worst = std::max(worst, std::abs(acc));
    }
    return {worst, false};
  }
  const auto& parts = std::get<CompositeMap<Scalar>>(f.node).parts;
  Scalar prod = 1;
  bool exact = true;
  for (const auto& part : parts) {
    const auto b = lipschitz_bound(part, box);
    prod *= b.value;
    exact = exact && b.exact;
  }
  return {prod, exact};
}

// ---------------------------------------------------------------------------
// Picard iteration for a single map; residual-based stopping rule
// (step ratios of a convex contraction may approach 1 on odd steps).

template <typename Scalar>
struct PicardResult {
  Point<Scalar> point;
  long long iterations;
  Scalar residual;
};

template <typename Scalar>
PicardResult<Scalar> picard_fixed_point(const MapDescriptor<Scalar>& f, const Point<Scalar>& x0,
                                        Scalar tol, long long max_iter) {
  if (!(tol > 0)) throw ValidationError("picard_fixed_point: tol must be positive");
  Point<Scalar> x = x0;
  Point<Scalar> fx = eval(f, x);
  Scalar resid = dist(x, fx);
  for (long long n = 0;; ++n) {
    if (resid <= tol) return {x, n, resid};
    if (n >= max_iter)
      throw ConvergenceError("picard_fixed_point: residual " + std::to_string(static_cast<double>(resid)) +
                                 " above tol after " + std::to_string(max_iter) + " iterations",
                             n, static_cast<double>(resid), x.template cast<double>().transpose());
    x = fx;
    fx = eval(f, x);
    resid = dist(x, fx);
  }
}

}  // namespace cvxifs
