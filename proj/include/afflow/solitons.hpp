#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "afflow/derivatives.hpp"
#include "afflow/ext_real.hpp"
#include "afflow/support_ops.hpp"

namespace afflow {

// ---------------------------------------------------------------------------
// Shrinking sphere
// ---------------------------------------------------------------------------

inline double sphere_extinction_time(int n, double r0) {
  return (n + 2.0) / (2.0 * n + 2.0) * std::pow(r0, (2.0 * n + 2.0) / (n + 2.0));
}

/// r(t) with r^{(2n+2)/(n+2)} decreasing linearly at rate (2n+2)/(n+2).
inline double sphere_radius(int n, double r0, double t) {
  const double e = (2.0 * n + 2.0) / (n + 2.0);
  const double base = std::pow(r0, e) - e * t;
  if (!(base > 0.0)) throw Error(ErrorKind::PastExtinction, "sphere has reached its extinction time");
  return std::pow(base, 1.0 / e);
}

inline double sphere_solution(double r0, const VecA& center, const VecA& Y, double t) {
  const int n = static_cast<int>(Y.size()) - 1;
  if (!(Y(n) < 0.0)) throw Error(ErrorKind::ChartViolation, "sphere oracle evaluated outside lower half-space");
  if (t < 0.0) throw Error(ErrorKind::InvalidArgument, "negative time");
  return sphere_radius(n, r0, t) * Y.norm() + center.dot(Y);
}

/// Sphere of radius r0 pushed forward by a unimodular map.
inline double ellipsoid_solution(double r0, const AffineMap& map, const VecA& Y, double t) {
  if (!map.unimodular()) throw Error(ErrorKind::NotUnimodular, "ellipsoid oracle needs |det A| = 1");
  const VecA Z = map.A().transpose() * Y;
  const int n = static_cast<int>(Y.size()) - 1;
  return sphere_radius(n, r0, t) * Z.norm() + map.b().dot(Y);
}

// ---------------------------------------------------------------------------
// Translating paraboloid and Calabi's expanding soliton
// ---------------------------------------------------------------------------

inline double paraboloid_solution(const VecN& y, double t) { return 0.5 * y.squaredNorm() - t; }

inline double calabi_constant(int n) { return std::sqrt(n + 1.0) * std::pow(2.0 / (n + 2.0), 0.5 * (n + 2.0)); }

inline double calabi_default_beta(int n) { return 0.5 * (n + 2.0); }

/// Orthant soliton: +inf if any Y_i > 0, else -(n+1)(c_n t^beta prod|Y_i|)^{1/(n+1)}.
inline ExtReal calabi_solution(const VecA& Y, double t, double beta) {
  const int n = static_cast<int>(Y.size()) - 1;
  if (t < 0.0) throw Error(ErrorKind::InvalidArgument, "negative time");
  double prod = 1.0;
  for (int i = 0; i <= n; ++i) {
    if (Y(i) > 0.0) return ExtReal::infinity();
    prod *= -Y(i);
  }
  return -(n + 1.0) * std::pow(calabi_constant(n) * std::pow(t, beta) * prod, 1.0 / (n + 1.0));
}

// ---------------------------------------------------------------------------
// Oracle wrapper
// ---------------------------------------------------------------------------

enum class SolitonKind { Sphere, Ellipsoid, Paraboloid, Calabi };

inline std::string to_string(SolitonKind k) {
  switch (k) {
    case SolitonKind::Sphere: return "sphere";
    case SolitonKind::Ellipsoid: return "ellipsoid";
    case SolitonKind::Paraboloid: return "paraboloid";
    case SolitonKind::Calabi: return "calabi";
  }
  return "?";
}

/// Exact solution of the flow with its validity window.
class SolitonOracle {
 public:
  static SolitonOracle sphere(int n, double r0, VecA center = {}) {
    SolitonOracle o(SolitonKind::Sphere, n);
    if (!(r0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "sphere radius must be positive");
    o.r0_ = r0;
    o.map_ = AffineMap::translation(center.size() == n + 1 ? center : VecA(VecA::Zero(n + 1)));
    o.t_end_ = sphere_extinction_time(n, r0);
    return o;
  }

  static SolitonOracle ellipsoid(double r0, const AffineMap& map) {
    if (!map.unimodular()) throw Error(ErrorKind::NotUnimodular, "ellipsoid oracle needs |det A| = 1");
    SolitonOracle o(SolitonKind::Ellipsoid, map.dim() - 1);
    o.r0_ = r0;
    o.map_ = map;
    o.t_end_ = sphere_extinction_time(o.n_, r0);
    return o;
  }

  /// Prop-4 style barrier eps sqrt(|y'|^2 + (j Y_{n+1})^2) + <v,Y> + j Y_{n+1},
  /// an ellipsoid unimodularly equivalent to a sphere of radius eps j^{1/(n+1)}.
  static SolitonOracle ellipsoid_barrier(double eps, const VecA& v, double j) {
    const int n = static_cast<int>(v.size()) - 1;
    if (!(eps > 0.0) || !(j >= 1.0)) throw Error(ErrorKind::InvalidArgument, "barrier needs eps > 0, j >= 1");
    const double lam = std::pow(j, -1.0 / (n + 1.0));
    MatA A = MatA::Identity(n + 1, n + 1) * lam;
    A(n, n) = j * lam;
    VecA b = v;
    b(n) += j;
    return ellipsoid(eps * std::pow(j, 1.0 / (n + 1.0)), AffineMap(A, b));
  }

  static SolitonOracle paraboloid(int n) {
    SolitonOracle o(SolitonKind::Paraboloid, n);
    o.map_ = AffineMap::identity(n + 1);
    return o;
  }

  /// Calabi's orthant soliton pushed forward by a unimodular map (A, b).
  static SolitonOracle calabi(int n, double beta, const AffineMap& map) {
    if (!map.unimodular()) throw Error(ErrorKind::NotUnimodular, "Calabi transform must be unimodular");
    SolitonOracle o(SolitonKind::Calabi, n);
    o.beta_ = beta;
    o.map_ = map;
    o.t_begin_ = 0.0;
    return o;
  }

  static SolitonOracle calabi(int n, double beta) { return calabi(n, beta, AffineMap::identity(n + 1)); }

  SolitonKind kind() const { return kind_; }
  int n() const { return n_; }
  double r0() const { return r0_; }
  double beta() const { return beta_; }
  const AffineMap& map() const { return map_; }
  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }
  /// Extinction time; +inf for non-compact kinds.
  double extinction_time() const { return t_end_; }

  bool valid_at(double t) const {
    if (kind_ == SolitonKind::Calabi) return t > 0.0;
    return t >= t_begin_ && t < t_end_;
  }

  ExtReal value(const VecA& Y, double t) const {
    if (!valid_at(t)) {
      if (kind_ == SolitonKind::Calabi) throw Error(ErrorKind::InvalidArgument, "Calabi oracle needs t > 0");
      throw Error(ErrorKind::PastExtinction, "time outside oracle validity window");
    }
    switch (kind_) {
      case SolitonKind::Sphere: return sphere_solution(r0_, map_.b(), Y, t);
      case SolitonKind::Ellipsoid: return ellipsoid_solution(r0_, map_, Y, t);
      case SolitonKind::Paraboloid: {
        if (!(Y(n_) < 0.0)) throw Error(ErrorKind::ChartViolation, "paraboloid oracle needs Y_{n+1} < 0");
        const double w = -Y(n_);
        return Y.head(n_).squaredNorm() / (2.0 * w) - t * w;
      }
      case SolitonKind::Calabi: {
        const ExtReal base = calabi_solution(map_.A().transpose() * Y, t, beta_);
        if (base.is_infinite()) return base;
        return base.value() + map_.b().dot(Y);
      }
    }
    return ExtReal::infinity();
  }

  ExtReal chart_value(const VecN& y, double t) const { return value(chart_point(y), t); }

  /// Chart sampler at a fixed time; +inf becomes an OutsideCone fault.
  ChartFn at_time(double t) const {
    return [o = *this, t](const VecN& y) {
      const ExtReal v = o.chart_value(y, t);
      if (v.is_infinite()) throw Error(ErrorKind::OutsideCone, "oracle is +inf at a sampled chart point");
      return v.value();
    };
  }

  SupportField sample(const GridSpec& grid, double t) const {
    return SupportField::sample(grid, at_time(t), t, to_string(kind_));
  }

  /// Exact hypersurface point with normal direction (y,-1) (gradient of the
  /// homogeneous support function).
  VecA surface_point(const VecN& y, double t) const {
    const VecA Y = chart_point(y);
    switch (kind_) {
      case SolitonKind::Sphere: return sphere_radius(n_, r0_, t) * Y / Y.norm() + map_.b();
      case SolitonKind::Ellipsoid: {
        const VecA Z = map_.A().transpose() * Y;
        return sphere_radius(n_, r0_, t) * (map_.A() * Z) / Z.norm() + map_.b();
      }
      case SolitonKind::Paraboloid: {
        VecA p(n_ + 1);
        p.head(n_) = y;
        p(n_) = 0.5 * y.squaredNorm() + t;
        return p;
      }
      case SolitonKind::Calabi: break;
    }
    throw Error(ErrorKind::InvalidArgument, "surface_point not available for this oracle kind");
  }

 private:
  SolitonOracle(SolitonKind k, int n) : kind_(k), n_(n) {}

  SolitonKind kind_;
  int n_;
  double r0_ = 0.0;
  double beta_ = 0.0;
  AffineMap map_;
  double t_begin_ = 0.0;
  double t_end_ = std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// PDE residual
// ---------------------------------------------------------------------------

struct ResidualReport {
  std::vector<double> residual;  // per grid node; zero off the evaluated set
  std::vector<std::size_t> nodes;
  double max = 0.0;
  double l2 = 0.0;
  std::size_t argmax = 0;
};

/// Central time difference plus (det hess)^{-1/(n+2)} on the given nodes.
inline ResidualReport pde_residual(const SolitonOracle& oracle, const GridSpec& grid, double t, double dt,
                                   const std::vector<std::size_t>& nodes) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  if (!oracle.valid_at(t - dt) || !oracle.valid_at(t + dt))
    throw Error(ErrorKind::PastExtinction, "t +- dt leaves the oracle validity window");
  const SupportField prev = oracle.sample(grid, t - dt);
  const SupportField now = oracle.sample(grid, t);
  const SupportField next = oracle.sample(grid, t + dt);
  const int n = grid.n();
  ResidualReport r;
  r.residual.assign(grid.size(), 0.0);
  r.nodes = nodes;
  double sum2 = 0.0;
  for (std::size_t f : nodes) {
    const double D = det_small(hessian(now, f));
    if (!(D > 0.0)) throw Error(ErrorKind::DegenerateHessian, "oracle Hessian not positive definite");
    const double res = (next[f] - prev[f]) / (2.0 * dt) + std::pow(D, -1.0 / (n + 2.0));
    r.residual[f] = res;
    sum2 += res * res;
    if (std::abs(res) > r.max) {
      r.max = std::abs(res);
      r.argmax = f;
    }
  }
  double cell = 1.0;
  for (int k = 0; k < n; ++k) cell *= grid.h(k);
  r.l2 = std::sqrt(sum2 * cell);
  return r;
}

inline ResidualReport pde_residual(const SolitonOracle& oracle, const GridSpec& grid, double t, double dt) {
  return pde_residual(oracle, grid, t, dt, grid.interior_nodes());
}

}  // namespace afflow
