#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "afflow/error.hpp"

namespace afflow {

inline constexpr int kMaxDim = 3;

// Dynamic sizes with a compile-time cap: no heap traffic in per-node loops.
using VecN = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using MatN = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using VecA = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim + 1, 1>;
using MatA = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim + 1, kMaxDim + 1>;

/// Totally symmetric rank-3 tensor over R^n, stored densely (n <= 3).
struct Sym3 {
  int n = 0;
  double v[kMaxDim][kMaxDim][kMaxDim] = {};

  double& operator()(int i, int j, int k) { return v[i][j][k]; }
  double operator()(int i, int j, int k) const { return v[i][j][k]; }
};

inline double det_small(const MatN& a) {
  switch (a.rows()) {
    case 1: return a(0, 0);
    case 2: return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    case 3:
      return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
             a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
             a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    default: return a.determinant();
  }
}

/// Smallest eigenvalue of a symmetric matrix; closed form for n <= 2.
inline double min_eig_sym(const MatN& a) {
  switch (a.rows()) {
    case 1: return a(0, 0);
    case 2: {
      const double m = 0.5 * (a(0, 0) + a(1, 1));
      const double d = 0.5 * (a(0, 0) - a(1, 1));
      return m - std::sqrt(d * d + a(0, 1) * a(0, 1));
    }
    default: {
      Eigen::SelfAdjointEigenSolver<MatN> es(a, Eigen::EigenvaluesOnly);
      return es.eigenvalues()(0);
    }
  }
}

inline MatN inverse_small(const MatN& a) {
  const double d = det_small(a);
  if (!(std::abs(d) > 0.0) || !std::isfinite(d)) {
    throw Error(ErrorKind::DegenerateHessian, "singular matrix in inverse");
  }
  return a.inverse();
}

}  // namespace afflow
