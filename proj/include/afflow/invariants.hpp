#pragma once

#include <array>
#include <cmath>

#include "afflow/derivatives.hpp"
#include "afflow/support_ops.hpp"

namespace afflow {

struct EuclideanData {
  VecA nu;    // inward unit normal
  MatN h;     // Euclidean second fundamental form
  MatN gbar;  // induced metric
};

inline EuclideanData euclidean_data_from(const MatN& hess, const VecN& y) {
  const int n = static_cast<int>(y.size());
  const double w = std::sqrt(1.0 + y.squaredNorm());
  EuclideanData e;
  e.nu = VecA(n + 1);
  e.nu.head(n) = -y / w;
  e.nu(n) = 1.0 / w;
  e.h = hess / w;
  e.gbar = induced_metric_from(hess, y).gbar;
  return e;
}

inline EuclideanData euclidean_data(const SupportField& s, std::size_t node) {
  return euclidean_data_from(hessian(s, node), s.grid.coord(node));
}

/// Equiaffine invariants at one chart point.
struct AffineFrame {
  int n = 0;
  double D = 0.0;     // det hess
  VecN lnD_grad;      // (ln D)_k = s^{pq} s_{pqk}
  double phi = 0.0;
  VecN Z;
  VecA xi;            // affine normal, closed form
  VecA xi_two_route;  // phi nu + Z^i F_i, for cross-checking
  VecA F;             // embedding point
  MatA Fi;            // columns F_1..F_n, size (n+1) x n
  MatN g;             // affine metric
  MatN hess;
  std::array<MatN, kMaxDim> Gamma;  // Gamma[k](i,j) = Gamma^k_{ij}
  Sym3 C;                           // cubic form, lowered
  double Cnorm2 = 0.0;
};

/// Builds the frame from derivative data so exact (symbolic) derivatives can
/// be fed in as well as stencil output.
inline AffineFrame affine_frame_from(const Derivatives& d, const VecN& y, double s_value) {
  const int n = static_cast<int>(y.size());
  const double np2 = n + 2.0;
  AffineFrame fr;
  fr.n = n;
  fr.hess = d.hess;
  fr.D = det_small(d.hess);
  if (!(fr.D > 0.0) || min_eig_sym(d.hess) <= 0.0)
    throw Error(ErrorKind::DegenerateHessian, "Hessian not positive definite");
  const MatN sinv = d.hess.inverse();

  fr.lnD_grad = VecN::Zero(n);
  for (int k = 0; k < n; ++k)
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) fr.lnD_grad(k) += sinv(p, q) * d.third(p, q, k);

  const double r2 = 1.0 + y.squaredNorm();
  const double Dm = std::pow(fr.D, -1.0 / np2);  // D^{-1/(n+2)}
  const double Dp = 1.0 / Dm;                    // D^{1/(n+2)}
  fr.phi = Dm / std::sqrt(r2);
  fr.Z = Dm * (sinv * y / r2 + sinv * fr.lnD_grad / np2);

  fr.F = VecA(n + 1);
  fr.F.head(n) = d.grad;
  fr.F(n) = d.grad.dot(y) - s_value;
  fr.Fi = MatA(n + 1, n);
  for (int i = 0; i < n; ++i) {
    fr.Fi.col(i).head(n) = d.hess.col(i);
    fr.Fi(n, i) = d.hess.col(i).dot(y);
  }

  fr.xi = VecA(n + 1);
  fr.xi.head(n) = Dm / np2 * fr.lnD_grad;
  fr.xi(n) = Dm / np2 * (np2 + fr.lnD_grad.dot(y));

  VecA nu(n + 1);
  nu.head(n) = -y / std::sqrt(r2);
  nu(n) = 1.0 / std::sqrt(r2);
  fr.xi_two_route = fr.phi * nu + fr.Fi * fr.Z;

  fr.g = Dp * d.hess;

  for (int k = 0; k < n; ++k) {
    fr.Gamma[k] = MatN::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = (k == i ? fr.lnD_grad(j) / np2 : 0.0) + (k == j ? fr.lnD_grad(i) / np2 : 0.0);
        for (int l = 0; l < n; ++l)
          acc += sinv(k, l) * d.third(i, j, l) - sinv(k, l) * fr.lnD_grad(l) * d.hess(i, j) / np2;
        fr.Gamma[k](i, j) = 0.5 * acc;
      }
  }

  // evaluated once per sorted triple and copied, so C is symmetric bit for bit
  fr.C.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = j; k < n; ++k) {
        const double c = Dp * (0.5 * d.third(i, j, k) - (d.hess(k, i) * fr.lnD_grad(j) + d.hess(k, j) * fr.lnD_grad(i) +
                                                         d.hess(i, j) * fr.lnD_grad(k)) /
                                                            (2.0 * np2));
        fr.C(i, j, k) = fr.C(i, k, j) = fr.C(j, i, k) = fr.C(j, k, i) = fr.C(k, i, j) = fr.C(k, j, i) = c;
      }

  const MatN ginv = fr.g.inverse();
  // Raise all three indices, then contract.
  double acc = 0.0;
  for (int l = 0; l < n; ++l)
    for (int m = 0; m < n; ++m)
      for (int p = 0; p < n; ++p) {
        double up = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) up += ginv(i, l) * ginv(j, m) * ginv(k, p) * fr.C(i, j, k);
        acc += up * fr.C(l, m, p);
      }
  fr.Cnorm2 = std::max(acc, 0.0);
  return fr;
}

inline AffineFrame affine_frame(const SupportField& s, std::size_t node) {
  return affine_frame_from(derivatives(s, node), s.grid.coord(node), s[node]);
}

/// g^{ij} C_{ijk}; zero for exact data.
inline VecN apolarity_trace(const AffineFrame& fr) {
  const MatN ginv = fr.g.inverse();
  VecN t = VecN::Zero(fr.n);
  for (int k = 0; k < fr.n; ++k)
    for (int i = 0; i < fr.n; ++i)
      for (int j = 0; j < fr.n; ++j) t(k) += ginv(i, j) * fr.C(i, j, k);
  return t;
}

struct ShapeOperator {
  MatN A;  // A(i, j) = A_i^j, with xi_{,i} = -A_i^j F_j
  double residual = 0.0;
  double condition = 0.0;
};

/// Least-squares fit of xi_{,i} = -A_i^j F_j using central differences of the
/// closed-form affine normal at neighbouring nodes.
inline ShapeOperator shape_operator(const SupportField& s, std::size_t node, double max_condition = 1e12) {
  if (s.grid.margin(node) < 3) throw Error(ErrorKind::BoundaryNode, "shape operator needs three cells of margin");
  const int n = s.grid.n();
  const AffineFrame here = affine_frame(s, node);

  Eigen::JacobiSVD<MatA> svd(here.Fi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto sv = svd.singularValues();
  ShapeOperator out;
  out.condition = sv(0) / sv(sv.size() - 1);
  if (!(out.condition < max_condition)) throw Error(ErrorKind::IllConditioned, "tangent frame nearly dependent");

  out.A = MatN(n, n);
  for (int i = 0; i < n; ++i) {
    const std::size_t up = node + s.grid.stride(i);
    const std::size_t dn = node - s.grid.stride(i);
    const VecA dxi = (affine_frame(s, up).xi - affine_frame(s, dn).xi) / (2.0 * s.grid.h(i));
    const VecN coeffs = svd.solve(dxi);
    out.A.row(i) = -coeffs.transpose();
    out.residual = std::max(out.residual, (here.Fi * coeffs - dxi).norm());
  }
  return out;
}

}  // namespace afflow
