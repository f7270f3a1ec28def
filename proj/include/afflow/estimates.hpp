#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "afflow/derivatives.hpp"
#include "afflow/error.hpp"
#include "afflow/ext_real.hpp"
#include "afflow/flow.hpp"
#include "afflow/invariants.hpp"

namespace afflow {

// ---------------------------------------------------------------------------
// Section normalisation and bowls
// ---------------------------------------------------------------------------

/// Subtract the affine function l(y) = s(x,t0) + <grad s(x,t0), y - x> (taken
/// from the first frame) from every frame. Hessians are untouched.
inline Trajectory normalize_section(const Trajectory& traj, std::size_t x) {
  if (traj.frames.empty()) throw Error(ErrorKind::EmptyInput, "trajectory has no frames");
  const SupportField& f0 = traj.frames.front();
  const VecN grad = gradient(f0, x);
  const VecN yx = f0.grid.coord(x);
  const double base = f0[x];
  Trajectory out = traj;
  const auto& g = f0.grid;
  std::vector<double> ell(g.size());
  for (std::size_t f = 0; f < g.size(); ++f) ell[f] = base + grad.dot(g.coord(f) - yx);
  for (auto& fr : out.frames) {
    if (!(fr.grid == g)) throw Error(ErrorKind::InvalidArgument, "frames live on different grids");
    for (std::size_t f = 0; f < g.size(); ++f) fr.values[f] -= ell[f];
    fr.label += "_normalized";
  }
  return out;
}

struct BowlDomain {
  double level = 0.0;
  std::vector<double> times;                    // one entry per trajectory frame
  std::vector<std::vector<std::size_t>> slices;  // Omega_t, sorted node lists
  std::size_t first = 0;                        // first nonempty slice
  bool nested = true;
  double t0 = 0.0;  // time of first nonempty slice
  double T = 0.0;   // top slice time
  std::vector<std::size_t> region;  // sorted candidate nodes

  bool contains(std::size_t frame, std::size_t node) const {
    return std::binary_search(slices[frame].begin(), slices[frame].end(), node);
  }
};

/// Omega_t = {nodes of `region` with s(., t) < level}. Region defaults to nodes
/// with one cell of margin so that Hessians exist.
inline BowlDomain bowl_domain(const Trajectory& traj, double level, std::vector<std::size_t> region = {}) {
  if (!(level < 0.0)) throw Error(ErrorKind::InvalidArgument, "bowl level must be negative");
  if (traj.frames.empty()) throw Error(ErrorKind::EmptyInput, "trajectory has no frames");
  const auto& g = traj.frames.front().grid;
  if (region.empty()) region = g.nodes_with_margin(1);
  std::sort(region.begin(), region.end());
  BowlDomain b;
  b.level = level;
  bool any = false;
  for (std::size_t k = 0; k < traj.frames.size(); ++k) {
    const auto& fr = traj.frames[k];
    std::vector<std::size_t> slice;
    for (std::size_t f : region)
      if (fr[f] < level) slice.push_back(f);
    if (!any && !slice.empty()) {
      any = true;
      b.first = k;
      b.t0 = fr.time;
    }
    if (k > 0 && b.nested)
      b.nested = std::includes(slice.begin(), slice.end(), b.slices.back().begin(), b.slices.back().end());
    b.times.push_back(fr.time);
    b.slices.push_back(std::move(slice));
  }
  if (!any) throw Error(ErrorKind::EmptyBowl, "no node dips below the bowl level");
  b.T = b.times.back();
  b.region = std::move(region);
  return b;
}

// ---------------------------------------------------------------------------
// Pogorelov quantity
// ---------------------------------------------------------------------------

struct PogorelovReport {
  VecN beta;
  double level = 0.0;
  std::vector<double> times;
  std::vector<double> max_w;  // per frame, 0 on empty slices
  double max = 0.0;
  std::size_t argmax_node = 0;
  std::size_t argmax_frame = 0;
  VecN argmax_y;
  /// argmax has all axis neighbours inside its slice and is not on the bottom slice
  bool interior = false;
  /// max |w| over the parabolic boundary: the ring just outside each slice and
  /// every node of the region before the bowl opens
  double boundary_max = 0.0;
  /// some slice reaches a node outside the bowl's region with s < level, i.e.
  /// the region cuts the sub-level set and the bowl is not closed
  bool truncated = false;
};

inline double pogorelov_w(const SupportField& s, std::size_t f, double level, const VecN& beta) {
  const double depth = std::max(0.0, level - s[f]);
  if (depth == 0.0) return 0.0;
  const VecN grad = gradient(s, f);
  const MatN H = hessian(s, f);
  const double db = grad.dot(beta);
  return depth * beta.dot(H * beta) * std::exp(0.5 * db * db);
}

inline PogorelovReport pogorelov_monitor(const Trajectory& traj, const BowlDomain& bowl, VecN beta) {
  if (traj.frames.size() != bowl.slices.size())
    throw Error(ErrorKind::InvalidArgument, "bowl does not belong to this trajectory");
  if (bowl.slices.back().empty()) throw Error(ErrorKind::EmptyBowl, "top slice is empty");
  const double bn = beta.norm();
  if (!(bn > 0.0)) throw Error(ErrorKind::InvalidArgument, "beta must be nonzero");
  beta /= bn;
  const auto& g = traj.frames.front().grid;
  const int n = g.n();

  PogorelovReport r;
  r.beta = beta;
  r.level = bowl.level;
  bool found = false;
  for (std::size_t k = 0; k < traj.frames.size(); ++k) {
    const auto& fr = traj.frames[k];
    const auto& slice = bowl.slices[k];
    std::vector<char> in(g.size(), 0);
    for (std::size_t f : slice) in[f] = 1;
    double mk = 0.0;
    for (std::size_t f : slice) {
      const double w = pogorelov_w(fr, f, bowl.level, beta);
      mk = std::max(mk, w);
      if (!found || w > r.max) {
        found = true;
        r.max = w;
        r.argmax_node = f;
        r.argmax_frame = k;
        bool inner = k > bowl.first;
        for (int a = 0; a < n && inner; ++a)
          inner = in[f + g.stride(a)] && in[f - g.stride(a)];
        r.interior = inner;
      }
      // ring just outside the slice
      for (int a = 0; a < n; ++a)
        for (int sgn : {-1, 1}) {
          const std::size_t nb = static_cast<std::size_t>(static_cast<long>(f) + sgn * static_cast<long>(g.stride(a)));
          if (in[nb]) continue;
          if (!std::binary_search(bowl.region.begin(), bowl.region.end(), nb)) {
            if (fr[nb] < bowl.level) r.truncated = true;
            continue;
          }
          r.boundary_max = std::max(r.boundary_max, std::abs(pogorelov_w(fr, nb, bowl.level, beta)));
        }
    }
    if (k < bowl.first)
      for (std::size_t f : bowl.region)
        r.boundary_max = std::max(r.boundary_max, std::abs(pogorelov_w(fr, f, bowl.level, beta)));
    r.times.push_back(fr.time);
    r.max_w.push_back(mk);
  }
  r.argmax_y = g.coord(r.argmax_node);
  return r;
}

// ---------------------------------------------------------------------------
// Speed estimate
// ---------------------------------------------------------------------------

struct SpeedReport {
  double r_floor = 0.0;
  std::vector<double> times;
  std::vector<double> Q;
  std::vector<std::size_t> argmax;
  std::vector<double> bound_profile;  // t^{n/(2n+2)} Q(t)
  double min_q = std::numeric_limits<double>::infinity();

  /// sup over times in [t_lo, t_hi] of min(1, t^{n/(2n+2)}) Q(t)
  double sup_profile(int n, double t_lo, double t_hi) const {
    double best = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (times[k] < t_lo || times[k] > t_hi) continue;
      best = std::max(best, std::min(1.0, std::pow(times[k], n / (2.0 * n + 2.0))) * Q[k]);
    }
    return best;
  }
};

/// q = -d_t s / (s - r_floor/2) with s evaluated on unit directions Y/|Y|, so
/// chart values are divided by sqrt(1+|y|^2). Time derivatives are central
/// between neighbouring frames and one-sided at the ends.
inline SpeedReport speed_monitor(const Trajectory& traj, double r_floor, std::vector<std::size_t> nodes = {}) {
  if (traj.frames.size() < 2) throw Error(ErrorKind::InsufficientSamples, "speed monitor needs two frames");
  if (!(r_floor > 0.0)) throw Error(ErrorKind::InvalidArgument, "r_floor must be positive");
  const auto& g = traj.frames.front().grid;
  if (nodes.empty()) nodes = g.interior_nodes();
  std::vector<double> scale(nodes.size());
  for (std::size_t a = 0; a < nodes.size(); ++a) scale[a] = 1.0 / std::sqrt(1.0 + g.coord(nodes[a]).squaredNorm());

  SpeedReport r;
  r.r_floor = r_floor;
  const std::size_t K = traj.frames.size();
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == K ? k : k + 1;
    const auto& a_fr = traj.frames[lo];
    const auto& b_fr = traj.frames[hi];
    const auto& fr = traj.frames[k];
    const double dt = b_fr.time - a_fr.time;
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "frame times must increase");
    double Qk = -std::numeric_limits<double>::infinity();
    std::size_t arg = nodes.front();
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      const std::size_t f = nodes[a];
      const double s = fr[f] * scale[a];
      if (s < r_floor)
        throw Error(ErrorKind::FloorViolated, "s = " + std::to_string(s) + " below r_floor at t = " +
                                                  std::to_string(fr.time));
      const double st = (b_fr[f] - a_fr[f]) / dt * scale[a];
      const double q = -st / (s - 0.5 * r_floor);
      r.min_q = std::min(r.min_q, q);
      if (q > Qk) {
        Qk = q;
        arg = f;
      }
    }
    r.times.push_back(fr.time);
    r.Q.push_back(Qk);
    r.argmax.push_back(arg);
    r.bound_profile.push_back(std::pow(std::max(fr.time, 0.0), g.n() / (2.0 * g.n() + 2.0)) * Qk);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Cubic form decay
// ---------------------------------------------------------------------------

struct CubicDecayReport {
  double tau = 0.0;
  double tol_C = 0.15;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::vector<double> times;
  std::vector<double> ratio;
  std::vector<std::size_t> argmax;
  double sup = 0.0;  // max ratio inside the window
  bool pass() const { return sup <= 1.0 + tol_C; }
};

/// ratio(t) = 2 (t - tau) max |C|^2 / (n(n+2)) over `nodes` (default: interior).
/// The window defaults to [0.1 t_end, t_end] on the clock t - tau.
inline CubicDecayReport cubic_decay_monitor(const Trajectory& traj, std::vector<std::size_t> nodes = {},
                                            double tau = 0.0, double tol_C = 0.15,
                                            std::optional<double> window_lo = std::nullopt,
                                            std::optional<double> window_hi = std::nullopt) {
  if (traj.frames.empty()) throw Error(ErrorKind::EmptyInput, "trajectory has no frames");
  const auto& g = traj.frames.front().grid;
  const int n = g.n();
  if (nodes.empty()) nodes = g.interior_nodes();
  CubicDecayReport r;
  r.tau = tau;
  r.tol_C = tol_C;
  const double t_end = traj.frames.back().time - tau;
  r.window_lo = window_lo.value_or(0.1 * t_end);
  r.window_hi = window_hi.value_or(t_end);
  for (const auto& fr : traj.frames) {
    const double clock = fr.time - tau;
    double best = 0.0;
    std::size_t arg = nodes.front();
    for (std::size_t f : nodes) {
      const double c2 = affine_frame(fr, f).Cnorm2;
      if (c2 > best) {
        best = c2;
        arg = f;
      }
    }
    const double ratio = 2.0 * clock * best / (n * (n + 2.0));
    r.times.push_back(fr.time);
    r.ratio.push_back(ratio);
    r.argmax.push_back(arg);
    if (clock >= r.window_lo - 1e-12 && clock <= r.window_hi + 1e-12) r.sup = std::max(r.sup, ratio);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Simplex barrier
// ---------------------------------------------------------------------------

/// Piecewise-affine upper barrier over the simplex Q = hull(p_0..p_n) with apex x:
/// on S_j = hull(x, p_k for k != j) the piece P_j vanishes at x and equals C' at
/// the other vertices; outside every S_j the barrier is +inf.
class SimplexBarrier {
 public:
  SimplexBarrier(const VecN& x, const std::vector<VecN>& p, double c_prime) : x_(x), p_(p), c_(c_prime) {
    const int n = static_cast<int>(x.size());
    if (static_cast<int>(p.size()) != n + 1) throw Error(ErrorKind::InvalidArgument, "need n+1 simplex points");
    MatN E(n, n);
    for (int k = 0; k < n; ++k) E.col(k) = p[k + 1] - p[0];
    const double vol = std::abs(det_small(E));
    double diam = 0.0;
    for (const auto& a : p)
      for (const auto& b : p) diam = std::max(diam, (a - b).norm());
    if (!(vol > 1e-12 * std::pow(std::max(diam, 1e-300), n)))
      throw Error(ErrorKind::DegenerateSimplex, "simplex points are affinely dependent");
    const VecA bary = barycentric(p, x);
    if (!((bary.array() > 0.0).all())) throw Error(ErrorKind::InvalidArgument, "apex must lie strictly inside the simplex");
    // P_j(y) = c' * (1 - lambda_x(y)) where lambda_x is the barycentric weight of x in S_j.
    for (int j = 0; j <= n; ++j) {
      std::vector<VecN> verts{x};
      for (int k = 0; k <= n; ++k)
        if (k != j) verts.push_back(p[k]);
      pieces_.push_back(verts);
    }
  }

  int n() const { return static_cast<int>(x_.size()); }
  double c_prime() const { return c_; }

  /// Barycentric coordinates of y relative to vertices v_0..v_n.
  static VecA barycentric(const std::vector<VecN>& v, const VecN& y) {
    const int n = static_cast<int>(y.size());
    MatN E(n, n);
    for (int k = 0; k < n; ++k) E.col(k) = v[k + 1] - v[0];
    const VecN l = E.fullPivLu().solve(y - v[0]);
    VecA out(n + 1);
    out(0) = 1.0 - l.sum();
    out.tail(n) = l;
    return out;
  }

  ExtReal operator()(const VecN& y, double tol = 1e-12) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& verts : pieces_) {
      const VecA b = barycentric(verts, y);
      if ((b.array() >= -tol).all()) best = std::min(best, c_ * (1.0 - b(0)));
    }
    return std::isinf(best) ? ExtReal::infinity() : ExtReal(best);
  }

  bool inside(const VecN& y, double tol = 1e-12) const { return (barycentric(p_, y).array() >= -tol).all(); }

  struct Verification {
    double min_gap = std::numeric_limits<double>::infinity();  // min of P - target over checked nodes
    double target_max = -std::numeric_limits<double>::infinity();
    std::size_t checked = 0;
    bool pass() const { return checked > 0 && min_gap >= 0.0; }
  };

  /// Check P >= target on every grid node inside Q.
  Verification verify(const SupportField& target, double tol = 1e-12) const {
    Verification v;
    const auto& g = target.grid;
    for (std::size_t f = 0; f < g.size(); ++f) {
      const VecN y = g.coord(f);
      if (!inside(y, tol)) continue;
      const ExtReal P = (*this)(y, tol);
      if (!P.is_finite()) continue;
      v.min_gap = std::min(v.min_gap, P.value() - target[f]);
      v.target_max = std::max(v.target_max, target[f]);
      ++v.checked;
    }
    return v;
  }

 private:
  VecN x_;
  std::vector<VecN> p_;
  double c_;
  std::vector<std::vector<VecN>> pieces_;
};

inline SimplexBarrier simplex_barrier(const VecN& x, const std::vector<VecN>& p, double c_prime) {
  return SimplexBarrier(x, p, c_prime);
}

}  // namespace afflow
