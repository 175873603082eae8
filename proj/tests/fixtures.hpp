#pragma once

// Shared in-memory test fixtures mirroring the shipped configuration files.

#include <vector>

#include "cvxifs/system.hpp"

namespace fixtures {

using Map = cvxifs::MapDescriptor<double>;
using Box = cvxifs::DomainBox<double>;
using Table = cvxifs::CoefficientTable<double>;
using System = cvxifs::IFSSystem<double>;

inline Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v(0) = x;
  return v;
}

inline Box unit_box_1d() { return {vec1(0.0), vec1(1.0)}; }

inline std::vector<Map> cantor_maps() {
  return {Map::scalar_affine(1.0 / 3.0, 0.0), Map::scalar_affine(1.0 / 3.0, 2.0 / 3.0)};
}

inline System cantor() {
  auto maps = cantor_maps();
  auto box = unit_box_1d();
  auto table = cvxifs::synthesize_affine_coeffs(maps, box);
  return System(std::move(maps), std::move(table), std::move(box));
}

inline std::vector<Map> quadratic_maps() {
  return {Map::poly1d({0.0, 0.0, 0.5}), Map::scalar_affine(0.5, 0.5)};
}

// Hand-checked table for the quadratic pair on [0,1]:
//   (1,1): |f1f1x - f1f1y| = |x^4 - y^4|/8 <= (1/2) |x^2 - y^2|/2   -> c11 = 1/2
//   (1,2): |(x+1)^2 - (y+1)^2|/8 <= (1/2) |x - y|                   -> a12 = 1/2
//   (2,1): |x^2 - y^2|/4 = (1/2) |x^2 - y^2|/2                      -> c21 = 1/2
//   (2,2): |x - y|/4 = (1/4) |x - y|                                -> a22 = 1/4
inline Table quadratic_table() {
  auto t = Table::zero(2);
  t.set_entry(0, 0, 0.0, 0.0, 0.5);
  t.set_entry(0, 1, 0.5, 0.0, 0.0);
  t.set_entry(1, 0, 0.0, 0.0, 0.5);
  t.set_entry(1, 1, 0.25, 0.0, 0.0);
  return t;
}

inline System quadratic() {
  return System(quadratic_maps(), quadratic_table(), unit_box_1d());
}

inline System sierpinski() {
  Eigen::MatrixXd half = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  const auto vertex_map = [&](double vx, double vy) {
    Eigen::VectorXd off(2);
    off << vx / 2.0, vy / 2.0;
    return Map::affine(half, off);
  };
  std::vector<Map> maps{vertex_map(0.0, 0.0), vertex_map(1.0, 0.0),
                        vertex_map(0.5, 0.8660254037844386)};
  Eigen::VectorXd lo(2), hi(2);
  lo << 0, 0;
  hi << 1, 1;
  Box box{lo, hi};
  auto table = cvxifs::synthesize_affine_coeffs(maps, box);
  return System(std::move(maps), std::move(table), std::move(box));
}

// Single-map system x/2 with the equality-case table a11 = 1/4.
inline System halving() {
  std::vector<Map> maps{Map::scalar_affine(0.5, 0.0)};
  auto t = Table::zero(1);
  t.set_entry(0, 0, 0.25, 0.0, 0.0);
  return System(std::move(maps), std::move(t), unit_box_1d());
}

inline Eigen::MatrixXd cloud1(std::initializer_list<double> xs) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

}  // namespace fixtures
