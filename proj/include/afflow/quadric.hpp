#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "afflow/error.hpp"
#include "afflow/invariants.hpp"

namespace afflow {

// ---------------------------------------------------------------------------
// Frame decomposition and the Lie quadric
// ---------------------------------------------------------------------------

struct FrameDecomposition {
  VecN U;
  double mu = 0.0;
  std::size_t base = 0;
  double cond = 0.0;
  double reconstruction_error = 0.0;  // relative
};

/// Solve P - F(y0) = U^i F_i(y0) + mu xi(y0) in a precomputed frame.
inline FrameDecomposition frame_decompose(const AffineFrame& fr, const VecA& P, double max_cond = 1e12) {
  const int n = fr.n;
  if (P.size() != n + 1) throw Error(ErrorKind::InvalidArgument, "point dimension must be n+1");
  MatA M(n + 1, n + 1);
  M.leftCols(n) = fr.Fi;
  M.col(n) = fr.xi;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  const double cond = sv(n) > 0.0 ? sv(0) / sv(n) : std::numeric_limits<double>::infinity();
  if (!(cond < max_cond)) throw Error(ErrorKind::SingularFrame, "frame {F_i, xi} is singular (cond " + std::to_string(cond) + ")");
  const VecA rhs = P - fr.F;
  const VecA sol = M.fullPivLu().solve(rhs);
  FrameDecomposition d;
  d.U = sol.head(n);
  d.mu = sol(n);
  d.cond = cond;
  const double scale = std::max({rhs.norm(), P.norm(), fr.F.norm(), 1.0});
  d.reconstruction_error = (M * sol - rhs).norm() / scale;
  return d;
}

inline FrameDecomposition frame_decompose(const SupportField& s, std::size_t y0, const VecA& P) {
  FrameDecomposition d = frame_decompose(affine_frame(s, y0), P);
  d.base = y0;
  return d;
}

/// Phi = g_ij U^i U^j - a mu^2 - 2 mu.
inline double lie_quadric_phi(const AffineFrame& fr, const VecA& P, double a) {
  const FrameDecomposition d = frame_decompose(fr, P);
  return d.U.dot(fr.g * d.U) - a * d.mu * d.mu - 2.0 * d.mu;
}

inline double lie_quadric_phi(const SupportField& s, std::size_t y0, const VecA& P, double a) {
  return lie_quadric_phi(affine_frame(s, y0), P, a);
}

// ---------------------------------------------------------------------------
// Affine sphere test
// ---------------------------------------------------------------------------

struct AffineSphereFit {
  double a = 0.0;
  VecA V;
  double deviation = 0.0;  // max |xi - a F - V|
  std::size_t samples = 0;
  double cond = 0.0;
};

/// Least-squares fit of xi(y) = a F(y) + V over sample nodes. max_cond bounds
/// sqrt(lambda_max/lambda_min) of the normal matrix, so 1e6 flags relative
/// eigenvalues below 1e-12.
inline AffineSphereFit affine_sphere_check(const SupportField& s, const std::vector<std::size_t>& nodes,
                                           double max_cond = 1e6) {
  const int n = s.grid.n();
  if (static_cast<int>(nodes.size()) < n + 3)
    throw Error(ErrorKind::InsufficientSamples, "affine sphere check needs at least n+3 nodes");
  std::vector<AffineFrame> frames;
  frames.reserve(nodes.size());
  for (std::size_t f : nodes) frames.push_back(affine_frame(s, f));

  // unknowns (a, V_0..V_n); one row per component per node
  const int k = n + 2;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  for (const auto& fr : frames)
    for (int c = 0; c <= n; ++c) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(k);
      row(0) = fr.F(c);
      row(1 + c) = 1.0;
      G += row * row.transpose();
      rhs += row * fr.xi(c);
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(k - 1);
  const double cond = lo > 0.0 ? std::sqrt(hi / lo) : std::numeric_limits<double>::infinity();
  if (!(cond < max_cond)) throw Error(ErrorKind::IllConditioned, "sample embedding does not determine a and V");
  const Eigen::VectorXd sol = G.ldlt().solve(rhs);

  AffineSphereFit out;
  out.a = sol(0);
  out.V = sol.tail(n + 1);
  out.samples = nodes.size();
  out.cond = cond;
  for (const auto& fr : frames) out.deviation = std::max(out.deviation, (fr.xi - out.a * fr.F - out.V).norm());
  return out;
}

// ---------------------------------------------------------------------------
// Quadric fit and classification
// ---------------------------------------------------------------------------

enum class QuadricClass { Ellipsoid, Paraboloid, Hyperboloid, Degenerate };

inline std::string to_string(QuadricClass c) {
  switch (c) {
    case QuadricClass::Ellipsoid: return "ellipsoid";
    case QuadricClass::Paraboloid: return "paraboloid";
    case QuadricClass::Hyperboloid: return "hyperboloid";
    case QuadricClass::Degenerate: return "degenerate";
  }
  return "?";
}

struct QuadricFit {
  Eigen::MatrixXd M;  // symmetric (n+2)x(n+2), unit Frobenius norm
  double residual = 0.0;
  Eigen::VectorXd spatial_eigenvalues;
  int positive = 0, negative = 0, zero = 0;
  QuadricClass classification = QuadricClass::Degenerate;
  double singular_gap = 0.0;  // second smallest / largest singular value of the design matrix
};

struct ClassifyTolerances {
  double zero = 1e-6;     // |lambda| <= zero * max |lambda| counts as 0
  double nonzero = 1e-3;  // |lambda| >= nonzero * max |lambda| counts as nonzero
};

/// Homogeneous quadratic form X^T M X (X = (x,1)) vanishing on the samples,
/// taken as the smallest right singular vector of the monomial design matrix.
inline QuadricFit fit_quadric_classify(const std::vector<VecA>& points, ClassifyTolerances tol = {}) {
  if (points.empty()) throw Error(ErrorKind::InsufficientSamples, "no sample points");
  const int d = static_cast<int>(points.front().size());  // n+1
  const int k = d + 1;                                      // homogeneous size n+2
  const int unknowns = k * (k + 1) / 2;
  if (static_cast<int>(points.size()) < unknowns)
    throw Error(ErrorKind::InsufficientSamples,
                "need at least " + std::to_string(unknowns) + " points, got " + std::to_string(points.size()));

  Eigen::MatrixXd A(points.size(), unknowns);
  for (std::size_t r = 0; r < points.size(); ++r) {
    if (points[r].size() != d) throw Error(ErrorKind::InvalidArgument, "mixed point dimensions");
    Eigen::VectorXd X(k);
    X.head(d) = points[r];
    X(d) = 1.0;
    int c = 0;
    for (int i = 0; i < k; ++i)
      for (int j = i; j < k; ++j) A(r, c++) = (i == j ? 1.0 : 2.0) * X(i) * X(j);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd coef = svd.matrixV().col(unknowns - 1);
  const auto& sv = svd.singularValues();

  QuadricFit q;
  q.singular_gap = sv(0) > 0.0 ? sv(unknowns - 2) / sv(0) : 0.0;
  q.M = Eigen::MatrixXd::Zero(k, k);
  int c = 0;
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) q.M(i, j) = q.M(j, i) = coef(c++);
  q.M /= q.M.norm();

  for (const auto& p : points) {
    Eigen::VectorXd X(k);
    X.head(d) = p;
    X(d) = 1.0;
    q.residual = std::max(q.residual, std::abs(X.dot(q.M * X)));
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.M.topLeftCorner(d, d));
  q.spatial_eigenvalues = es.eigenvalues();
  const double big = q.spatial_eigenvalues.cwiseAbs().maxCoeff();
  int zero_idx = -1;
  for (int i = 0; i < d; ++i) {
    const double l = q.spatial_eigenvalues(i);
    const double rel = big > 0.0 ? std::abs(l) / big : 0.0;
    if (rel <= tol.zero) {
      ++q.zero;
      zero_idx = i;
    } else if (rel >= tol.nonzero) {
      (l > 0.0 ? q.positive : q.negative)++;
    } else {
      throw Error(ErrorKind::AmbiguousSignature, "spatial eigenvalue " + std::to_string(l) +
                                                     " is neither clearly zero nor clearly nonzero");
    }
  }

  if (q.zero == 0 && (q.positive == 0 || q.negative == 0)) {
    q.classification = QuadricClass::Ellipsoid;
  } else if (q.zero == 0) {
    q.classification = QuadricClass::Hyperboloid;
  } else if (q.zero == 1 && (q.positive == 0 || q.negative == 0)) {
    // the linear part must reach the null direction, otherwise it is a cylinder
    const Eigen::VectorXd null_dir = es.eigenvectors().col(zero_idx);
    const double lin = std::abs(null_dir.dot(q.M.topRightCorner(d, 1).col(0)));
    q.classification = lin >= tol.nonzero * big ? QuadricClass::Paraboloid : QuadricClass::Degenerate;
  } else {
    q.classification = QuadricClass::Degenerate;
  }
  return q;
}

/// Embedding points F at the given nodes of a discrete field.
inline std::vector<VecA> embedding_samples(const SupportField& s, const std::vector<std::size_t>& nodes) {
  std::vector<VecA> out;
  out.reserve(nodes.size());
  for (std::size_t f : nodes) out.push_back(embedding_point(s, f));
  return out;
}

}  // namespace afflow
