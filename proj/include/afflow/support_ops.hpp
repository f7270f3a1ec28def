#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "afflow/derivatives.hpp"
#include "afflow/error.hpp"
#include "afflow/support_field.hpp"

namespace afflow {

// ---------------------------------------------------------------------------
// Polytopes and affine maps
// ---------------------------------------------------------------------------

/// s(y) = max over vertices x of <x, (y,-1)>.
inline SupportField support_of_polytope(const std::vector<VecA>& vertices, const GridSpec& grid,
                                        double time = 0.0, std::string label = "polytope") {
  if (vertices.empty()) throw Error(ErrorKind::EmptyInput, "polytope needs at least one vertex");
  const int n = grid.n();
  for (const auto& v : vertices)
    if (v.size() != n + 1) throw Error(ErrorKind::InvalidArgument, "vertex dimension must be n+1");
  std::vector<double> vals(grid.size());
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const VecN y = grid.coord(f);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& x : vertices) best = std::max(best, x.head(n).dot(y) - x(n));
    vals[f] = best;
  }
  return SupportField(grid, std::move(vals), time, std::move(label));
}

/// x -> A x + b on R^{n+1}.
class AffineMap {
 public:
  AffineMap() = default;
  AffineMap(MatA A, VecA b) : A_(std::move(A)), b_(std::move(b)) {
    if (A_.rows() != A_.cols() || A_.rows() != b_.size())
      throw Error(ErrorKind::InvalidArgument, "affine map dimensions disagree");
    const double d = A_.determinant();
    if (!(std::abs(d) > 1e-14)) throw Error(ErrorKind::InvalidArgument, "affine map matrix must be invertible");
    unimodular_ = std::abs(std::abs(d) - 1.0) <= 1e-12;
  }

  static AffineMap identity(int dim) { return AffineMap(MatA::Identity(dim, dim), VecA::Zero(dim)); }
  static AffineMap translation(const VecA& b) { return AffineMap(MatA::Identity(b.size(), b.size()), b); }

  const MatA& A() const { return A_; }
  const VecA& b() const { return b_; }
  int dim() const { return static_cast<int>(A_.rows()); }
  bool unimodular() const { return unimodular_; }

  /// (this ∘ inner)(x) = A (A_in x + b_in) + b.
  AffineMap after(const AffineMap& inner) const { return AffineMap(A_ * inner.A_, A_ * inner.b_ + b_); }

  VecA apply(const VecA& x) const { return A_ * x + b_; }

 private:
  MatA A_;
  VecA b_;
  bool unimodular_ = false;
};

/// Support function of A L + b from that of L: s(A^T Y) + <b, Y>.
inline SupportField apply_affine(const SupportField& s, const AffineMap& map, const GridSpec& target) {
  const int n = target.n();
  if (map.dim() != n + 1 || s.grid.n() != n) throw Error(ErrorKind::InvalidArgument, "affine map dimension mismatch");
  const MatA At = map.A().transpose();
  std::vector<double> vals(target.size());
  for (std::size_t f = 0; f < target.size(); ++f) {
    const VecA Y = chart_point(target.coord(f));
    vals[f] = eval_homogeneous(s, At * Y) + map.b().dot(Y);
  }
  return SupportField(target, std::move(vals), s.time, s.label + "|affine");
}

inline ChartFn apply_affine(ChartFn s, const AffineMap& map) {
  const MatA At = map.A().transpose();
  const VecA b = map.b();
  return [s = std::move(s), At, b](const VecN& y) {
    const VecA Y = chart_point(y);
    return eval_homogeneous(s, At * Y) + b.dot(Y);
  };
}

// ---------------------------------------------------------------------------
// Embedding and Euclidean metric
// ---------------------------------------------------------------------------

/// Hypersurface point with support (y,-1): (grad s, <grad s, y> - s).
inline VecA embedding_point(const SupportField& s, std::size_t node) {
  const VecN g = gradient(s, node);
  const VecN y = s.grid.coord(node);
  const int n = s.grid.n();
  VecA F(n + 1);
  F.head(n) = g;
  F(n) = g.dot(y) - s[node];
  return F;
}

struct InducedMetric {
  MatN gbar;
  double det = 0.0;
};

inline InducedMetric induced_metric_from(const MatN& hess, const VecN& y) {
  if (!(det_small(hess) > 0.0)) throw Error(ErrorKind::DegenerateHessian, "Hessian determinant not positive");
  const int n = static_cast<int>(y.size());
  const MatN mid = y * y.transpose() + MatN::Identity(n, n);
  InducedMetric r;
  r.gbar = hess * mid * hess;
  r.det = det_small(r.gbar);
  return r;
}

/// gbar_ij = s_ik (y^k y^l + delta^kl) s_lj.
inline InducedMetric induced_metric(const SupportField& s, std::size_t node) {
  return induced_metric_from(hessian(s, node), s.grid.coord(node));
}

// ---------------------------------------------------------------------------
// Convexity diagnostics
// ---------------------------------------------------------------------------

struct ConvexityReport {
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  std::size_t argmin = 0;
  double tolerance = 0.0;
  std::vector<std::size_t> failing;

  bool admissible() const { return failing.empty(); }
};

inline double default_convexity_tol(const SupportField& s, double rel = 1e-8) {
  return rel * std::max(s.max_abs(), 1e-300);
}

/// Minimum Hessian eigenvalue over the given nodes; a node fails when its
/// minimum eigenvalue is <= -tol.
inline ConvexityReport convexity_check(const SupportField& s, const std::vector<std::size_t>& nodes, double tol) {
  ConvexityReport r;
  r.tolerance = tol;
  for (std::size_t f : nodes) {
    const double e = min_eig_sym(hessian(s, f));
    if (e < r.min_eigenvalue) {
      r.min_eigenvalue = e;
      r.argmin = f;
    }
    if (!(e > -tol)) r.failing.push_back(f);
  }
  return r;
}

inline ConvexityReport convexity_check(const SupportField& s) {
  return convexity_check(s, s.grid.interior_nodes(), default_convexity_tol(s));
}

// ---------------------------------------------------------------------------
// Noncompact bodies
// ---------------------------------------------------------------------------

/// Surface sample of a convex body with its inward unit normal.
struct SurfaceSample {
  VecA point;
  VecA inward_normal;
};

/// Noncompact convex body given by a closed-form chart support function, the
/// lower bound s(y) >= eps sqrt(|y|^2+1) + <p,y> - c, and a rule producing
/// surface samples inside a truncation radius (used for exhaustion).
struct NoncompactBodySpec {
  int n = 1;
  double eps = 0.0;
  VecN p;
  double c = 0.0;
  ChartFn support;
  std::function<std::vector<SurfaceSample>(double radius)> surface_samples;
  /// Radius of a ball that rolls freely inside the body (inner parallel body).
  double rolling_radius = 0.0;
  /// Truncation radius used for exhaustion index i is cap_scale * i.
  double cap_scale = 1.0;

  /// Nondegeneracy at every node of grid; throws InvalidArgument otherwise.
  void validate(const GridSpec& grid) const {
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "nondegeneracy requires eps > 0");
    if (!support) throw Error(ErrorKind::InvalidArgument, "body has no support sampler");
    for (std::size_t f = 0; f < grid.size(); ++f) {
      const VecN y = grid.coord(f);
      const double lower = eps * std::sqrt(y.squaredNorm() + 1.0) + p.dot(y) - c;
      if (!(support(y) >= lower - 1e-12))
        throw Error(ErrorKind::InvalidArgument, "nondegeneracy lower bound violated on the chart");
    }
  }

  /// Graph x_{n+1} = |x|^2/2: support |y|^2/2 with eps = 1/2, p = 0, c = 1/2
  /// (|y|^2/2 >= (sqrt(|y|^2+1) - 1)/2 everywhere). Samples lie on a fixed
  /// lattice of spacing `spacing` so that caps are nested exactly.
  static NoncompactBodySpec paraboloid(int n, double spacing, double cap_scale = 1.0, double rolling = 0.5) {
    NoncompactBodySpec b;
    b.n = n;
    b.eps = 0.5;
    b.p = VecN::Zero(n);
    b.c = 0.5;
    b.support = [](const VecN& y) { return 0.5 * y.squaredNorm(); };
    b.rolling_radius = rolling;
    b.cap_scale = cap_scale;
    b.surface_samples = [n, spacing](double radius) {
      std::vector<SurfaceSample> out;
      const int k = static_cast<int>(std::floor(radius / spacing + 1e-9));
      std::array<int, kMaxDim> idx{};
      for (int d = 0; d < n; ++d) idx[d] = -k;
      while (true) {
        VecN x(n);
        for (int d = 0; d < n; ++d) x(d) = idx[d] * spacing;
        if (x.norm() <= radius + 1e-12) {
          VecA pt(n + 1), nu(n + 1);
          pt.head(n) = x;
          pt(n) = 0.5 * x.squaredNorm();
          nu.head(n) = -x;
          nu(n) = 1.0;
          nu /= nu.norm();
          out.push_back({pt, nu});
        }
        int d = n - 1;
        while (d >= 0 && idx[d] == k) idx[d--] = -k;
        if (d < 0) break;
        ++idx[d];
      }
      return out;
    };
    return b;
  }
};

}  // namespace afflow
