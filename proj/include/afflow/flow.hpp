#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "afflow/derivatives.hpp"
#include "afflow/solitons.hpp"
#include "afflow/support_ops.hpp"

namespace afflow {

// ---------------------------------------------------------------------------
// Configuration and records
// ---------------------------------------------------------------------------

/// Dirichlet data applied to every node outside the active set.
struct BoundaryData {
  enum class Mode { Oracle, Constant, Frozen };
  Mode mode = Mode::Frozen;
  std::function<double(const VecN& y, double t)> oracle;
  double constant = 0.0;

  static BoundaryData frozen() { return {}; }
  static BoundaryData constant_value(double v) {
    BoundaryData b;
    b.mode = Mode::Constant;
    b.constant = v;
    return b;
  }
  static BoundaryData from_oracle(const SolitonOracle& o) {
    BoundaryData b;
    b.mode = Mode::Oracle;
    b.oracle = [o](const VecN& y, double t) { return o.chart_value(y, t).value(); };
    return b;
  }
  // Oracle inside its domain, `fill` where the oracle is +inf (masked runs).
  static BoundaryData from_oracle(const SolitonOracle& o, double fill) {
    BoundaryData b;
    b.mode = Mode::Oracle;
    b.oracle = [o, fill](const VecN& y, double t) {
      const ExtReal v = o.chart_value(y, t);
      return v.is_finite() ? v.value() : fill;
    };
    return b;
  }

  std::string mode_name() const {
    switch (mode) {
      case Mode::Oracle: return "oracle";
      case Mode::Constant: return "constant";
      case Mode::Frozen: return "frozen";
    }
    return "?";
  }
};

struct DtPolicy {
  enum class Kind { Fixed, Adaptive };
  Kind kind = Kind::Adaptive;
  double dt = 0.0;
  double cfl = 0.25;

  static DtPolicy fixed(double dt) { return {Kind::Fixed, dt, 0.0}; }
  static DtPolicy adaptive(double cfl) { return {Kind::Adaptive, 0.0, cfl}; }
};

struct FlowConfig {
  DtPolicy dt_policy = DtPolicy::adaptive(0.25);
  double t_end = 0.0;
  BoundaryData boundary;
  bool convexity_guard = true;
  int record_every = 1;
  /// Nodes advanced by the PDE; empty means every node with one cell of margin.
  std::vector<std::size_t> active;
  /// Closed-domain flags for masked runs; empty means the whole grid. When set,
  /// Hessians near the domain edge use stencils that stay inside it.
  std::vector<char> domain;
  int max_halvings = 10;
  long max_steps = 50'000'000;

  void validate() const {
    if (dt_policy.kind == DtPolicy::Kind::Fixed && !(dt_policy.dt > 0.0))
      throw Error(ErrorKind::ConfigInvalid, "fixed dt must be positive");
    if (dt_policy.kind == DtPolicy::Kind::Adaptive && !(dt_policy.cfl > 0.0 && dt_policy.cfl <= 0.5))
      throw Error(ErrorKind::ConfigInvalid, "cfl factor must lie in (0, 0.5]");
    if (!(t_end > 0.0)) throw Error(ErrorKind::ConfigInvalid, "t_end must be positive");
    if (record_every < 1) throw Error(ErrorKind::ConfigInvalid, "record_every must be >= 1");
    if (boundary.mode == BoundaryData::Mode::Oracle && !boundary.oracle)
      throw Error(ErrorKind::ConfigInvalid, "oracle boundary mode without an oracle");
  }
};

struct FlowEvent {
  long step = 0;
  double time = 0.0;
  std::string kind;
  std::string message;
};

struct Trajectory {
  std::vector<SupportField> frames;
  std::vector<double> dts;
  std::vector<FlowEvent> events;
  bool aborted = false;
  std::string abort_reason;

  const SupportField& final() const { return frames.back(); }
};

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::size_t> resolve_active(const SupportField& s, const std::vector<std::size_t>& active) {
  if (active.empty()) return s.grid.nodes_with_margin(1);
  for (std::size_t f : active)
    if (f >= s.grid.size() || s.grid.margin(f) < 1)
      throw Error(ErrorKind::BoundaryNode, "active node without one cell of margin");
  return active;
}

inline std::vector<char> membership(std::size_t size, const std::vector<std::size_t>& nodes) {
  std::vector<char> in(size, 0);
  for (std::size_t f : nodes) in[f] = 1;
  return in;
}

inline const std::vector<char>* domain_ptr(const GridSpec& g, const std::vector<char>& domain) {
  if (domain.empty()) return nullptr;
  if (domain.size() != g.size()) throw Error(ErrorKind::InvalidArgument, "domain mask size does not match the grid");
  return &domain;
}

struct RhsScan {
  std::vector<double> speed;  // D^{-1/(n+2)} per active node
  double min_eig = std::numeric_limits<double>::infinity();
  double dt_bound = std::numeric_limits<double>::infinity();  // min lambda_min / (speed n)
};

// Pre-step scan: speeds, convexity, explicit stability bound.
inline RhsScan scan(const SupportField& s, const std::vector<std::size_t>& active,
                    const std::vector<char>* domain = nullptr) {
  const int n = s.grid.n();
  RhsScan r;
  r.speed.resize(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    const MatN H = domain ? hessian_masked(s, active[a], *domain) : hessian_unchecked(s, active[a]);
    const double lam = min_eig_sym(H);
    const double D = det_small(H);
    r.min_eig = std::min(r.min_eig, lam);
    if (!(lam > 0.0) || !(D > 0.0)) {
      r.speed[a] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    r.speed[a] = inverse_root_det(D, n);
    r.dt_bound = std::min(r.dt_bound, lam / (r.speed[a] * n));
  }
  return r;
}

inline void apply_boundary_at(std::vector<double>& vals, const GridSpec& g, const std::vector<std::size_t>& nodes,
                              const BoundaryData& bd, const std::vector<double>& initial, double t) {
  for (std::size_t f : nodes) {
    switch (bd.mode) {
      case BoundaryData::Mode::Oracle: vals[f] = bd.oracle(g.coord(f), t); break;
      case BoundaryData::Mode::Constant: vals[f] = bd.constant; break;
      case BoundaryData::Mode::Frozen: vals[f] = initial[f]; break;
    }
  }
}

// Non-active nodes.
inline std::vector<std::size_t> complement(const std::vector<char>& in_active) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < in_active.size(); ++f)
    if (!in_active[f]) out.push_back(f);
  return out;
}

// Non-active nodes read by the Hessian stencil of some active node.
inline std::vector<std::size_t> halo(const GridSpec& g, const std::vector<std::size_t>& active,
                                     const std::vector<char>& in_active) {
  std::vector<char> mark(g.size(), 0);
  const int n = g.n();
  std::vector<long> offs{0};
  for (int k = 0; k < n; ++k) {
    const long st = static_cast<long>(g.stride(k));
    std::vector<long> next;
    for (long o : offs)
      for (int d = -1; d <= 1; ++d) next.push_back(o + d * st);
    offs = std::move(next);
  }
  for (std::size_t f : active)
    for (long o : offs) {
      const auto idx = static_cast<std::size_t>(static_cast<long>(f) + o);
      if (!in_active[idx]) mark[idx] = 1;
    }
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < g.size(); ++f)
    if (mark[f]) out.push_back(f);
  return out;
}

// Euler update of the active nodes; boundary data is refreshed on `boundary_nodes` only.
inline SupportField advance(const SupportField& s, const RhsScan& sc, const std::vector<std::size_t>& active,
                            const std::vector<std::size_t>& boundary_nodes, double dt, const BoundaryData& bd,
                            const std::vector<double>& initial) {
  std::vector<double> v = s.values;
  for (std::size_t a = 0; a < active.size(); ++a) v[active[a]] -= dt * sc.speed[a];
  apply_boundary_at(v, s.grid, boundary_nodes, bd, initial, s.time + dt);
  return SupportField(s.grid, std::move(v), s.time + dt, s.label);
}

}  // namespace detail

/// One forward-Euler step of s_t = -(det hess)^{-1/(n+2)} on the active nodes;
/// the rest are overwritten by the boundary data at time + dt.
inline SupportField step(const SupportField& s, double dt, const BoundaryData& boundary,
                         const std::vector<std::size_t>& active_in = {}, bool convexity_guard = true,
                         const std::vector<char>& domain = {}) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  const auto active = detail::resolve_active(s, active_in);
  const auto in_active = detail::membership(s.grid.size(), active);
  const auto* dom = detail::domain_ptr(s.grid, domain);
  const auto sc = detail::scan(s, active, dom);
  if (!(sc.min_eig > 0.0)) throw Error(ErrorKind::DegenerateHessian, "input field is not strictly convex");
  SupportField next = detail::advance(s, sc, active, detail::complement(in_active), dt, boundary, s.values);
  if (convexity_guard) {
    const auto post = detail::scan(next, active, dom);
    if (!(post.min_eig > -default_convexity_tol(next)))
      throw Error(ErrorKind::ConvexityLost, "step destroyed discrete convexity");
  }
  return next;
}

/// Repeated stepping to cfg.t_end. On convexity loss the step is retried with
/// half the step size, up to cfg.max_halvings times, before aborting with the
/// partial trajectory.
inline Trajectory evolve(const SupportField& s0, const FlowConfig& cfg) {
  cfg.validate();
  const auto active = detail::resolve_active(s0, cfg.active);
  const auto in_active = detail::membership(s0.grid.size(), active);
  Trajectory traj;
  const auto* dom = detail::domain_ptr(s0.grid, cfg.domain);
  // Per step only the halo read by the stencils is refreshed; the remaining
  // boundary nodes are brought up to date whenever a frame is recorded.
  const auto halo = detail::halo(s0.grid, active, in_active);
  const auto outside = detail::complement(in_active);
  auto record = [&](SupportField fr) {
    detail::apply_boundary_at(fr.values, fr.grid, outside, cfg.boundary, s0.values, fr.time);
    traj.frames.push_back(std::move(fr));
  };
  const double h = [&] {
    double r = std::numeric_limits<double>::infinity();
    for (int k = 0; k < s0.grid.n(); ++k) r = std::min(r, s0.grid.h(k));
    return r;
  }();

  traj.frames.push_back(s0);
  SupportField cur = s0;
  detail::RhsScan sc = detail::scan(cur, active, dom);
  if (!(sc.min_eig > 0.0)) throw Error(ErrorKind::DegenerateHessian, "initial field is not strictly convex");

  const double t_final = s0.time + cfg.t_end;
  long steps = 0;
  bool logged_policy = false;
  while (cur.time < t_final - 1e-13 * std::max(1.0, std::abs(t_final))) {
    if (steps >= cfg.max_steps) {
      traj.aborted = true;
      traj.abort_reason = "step budget exhausted";
      break;
    }
    double dt = cfg.dt_policy.kind == DtPolicy::Kind::Fixed ? cfg.dt_policy.dt : cfg.dt_policy.cfl * h * h * sc.dt_bound;
    if (!logged_policy && cfg.dt_policy.kind == DtPolicy::Kind::Adaptive) {
      traj.events.push_back({steps, cur.time, "dt_policy",
                             "dt = cfl*h^2*min(lambda_min/(speed*n)); initial dt = " + std::to_string(dt)});
      logged_policy = true;
    }
    dt = std::min(dt, t_final - cur.time);

    bool accepted = false;
    for (int attempt = 0; attempt <= cfg.max_halvings; ++attempt) {
      SupportField next = detail::advance(cur, sc, active, halo, dt, cfg.boundary, s0.values);
      detail::RhsScan next_sc = detail::scan(next, active, dom);
      const bool ok = !cfg.convexity_guard || next_sc.min_eig > -default_convexity_tol(next);
      const bool finite_speed = next_sc.min_eig > 0.0;
      if (ok && finite_speed) {
        cur = std::move(next);
        sc = std::move(next_sc);
        accepted = true;
        break;
      }
      traj.events.push_back({steps, cur.time, "reject",
                             "convexity lost (min eig " + std::to_string(next_sc.min_eig) + "), dt -> " +
                                 std::to_string(dt / 2)});
      dt *= 0.5;
    }
    if (!accepted) {
      traj.aborted = true;
      traj.abort_reason = "ConvexityLost: step rejected after " + std::to_string(cfg.max_halvings) + " halvings";
      traj.events.push_back({steps, cur.time, "abort", traj.abort_reason});
      break;
    }
    traj.dts.push_back(dt);
    ++steps;
    if (steps % cfg.record_every == 0) record(cur);
  }
  if (traj.frames.back().time != cur.time) record(cur);
  return traj;
}

// ---------------------------------------------------------------------------
// Comparison monitoring
// ---------------------------------------------------------------------------

struct BarrierReport {
  std::vector<double> times;
  std::vector<double> max_diff;  // max over nodes of lower - upper
  std::vector<std::size_t> worst_node;
  double worst = -std::numeric_limits<double>::infinity();
  double scale = 0.0;  // h^2 + dt

  double violation() const { return std::max(0.0, worst); }
  /// Ordering holds up to C * (h^2 + dt).
  bool pass(double C) const { return violation() <= C * scale; }
  double constant() const { return scale > 0.0 ? violation() / scale : 0.0; }
};

namespace detail {
inline double max_dt(const Trajectory& t) {
  double r = 0.0;
  for (double d : t.dts) r = std::max(r, d);
  return r;
}
}  // namespace detail

inline BarrierReport barrier_monitor(const std::function<double(std::size_t frame, std::size_t node)>& lower,
                                     const Trajectory& upper, const std::vector<std::size_t>& nodes, double dt_scale) {
  BarrierReport r;
  const auto& g = upper.frames.front().grid;
  r.scale = g.h_max() * g.h_max() + dt_scale;
  for (std::size_t k = 0; k < upper.frames.size(); ++k) {
    const auto& fr = upper.frames[k];
    double mx = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t f : nodes) {
      const double d = lower(k, f) - fr[f];
      if (d > mx) {
        mx = d;
        arg = f;
      }
    }
    r.times.push_back(fr.time);
    r.max_diff.push_back(mx);
    r.worst_node.push_back(arg);
    r.worst = std::max(r.worst, mx);
  }
  return r;
}

/// Lower bound given by a closed-form oracle.
inline BarrierReport barrier_monitor(const SolitonOracle& lower, const Trajectory& upper,
                                     std::vector<std::size_t> nodes = {}) {
  const auto& g = upper.frames.front().grid;
  if (nodes.empty()) nodes = g.nodes_with_margin(0);
  auto fn = [&](std::size_t k, std::size_t f) {
    return lower.chart_value(g.coord(f), upper.frames[k].time).value();
  };
  return barrier_monitor(fn, upper, nodes, detail::max_dt(upper));
}

/// Lower bound given by another trajectory recorded at the same times.
inline BarrierReport barrier_monitor(const Trajectory& lower, const Trajectory& upper,
                                     std::vector<std::size_t> nodes = {}) {
  if (lower.frames.size() != upper.frames.size())
    throw Error(ErrorKind::InvalidArgument, "trajectories must share recorded times");
  for (std::size_t k = 0; k < lower.frames.size(); ++k)
    if (std::abs(lower.frames[k].time - upper.frames[k].time) > 1e-12 * std::max(1.0, upper.frames[k].time))
      throw Error(ErrorKind::InvalidArgument, "trajectories must share recorded times");
  const auto& g = upper.frames.front().grid;
  if (nodes.empty()) nodes = g.nodes_with_margin(0);
  auto fn = [&](std::size_t k, std::size_t f) { return lower.frames[k][f]; };
  return barrier_monitor(fn, upper, nodes, std::max(detail::max_dt(lower), detail::max_dt(upper)));
}

/// eps sqrt(|y|^2 + j^2) + <v, (y,-1)> - j.
inline SupportField ellipsoid_barrier(double eps, const VecA& v, double j, const GridSpec& grid) {
  return SolitonOracle::ellipsoid_barrier(eps, v, j).sample(grid, 0.0);
}

// ---------------------------------------------------------------------------
// Exhaustion by compact bodies
// ---------------------------------------------------------------------------

/// Compact approximant i: the cap of body samples within radius cap_scale*i,
/// thickened by an inner rolling ball so that it stays strictly convex. Caps
/// come from a fixed sample lattice, so s_i <= s_{i+1} <= s holds exactly.
inline SupportField exhaust_sequence(const NoncompactBodySpec& body, int i, const GridSpec& grid) {
  if (i < 1) throw Error(ErrorKind::InvalidArgument, "exhaustion index must be >= 1");
  const auto samples = body.surface_samples(body.cap_scale * i);
  if (samples.empty()) throw Error(ErrorKind::EmptyTruncation, "truncation radius captures no sample points");
  std::vector<VecA> centers;
  centers.reserve(samples.size());
  for (const auto& smp : samples) centers.push_back(smp.point + body.rolling_radius * smp.inward_normal);
  SupportField hull = support_of_polytope(centers, grid, 0.0, "exhaust_" + std::to_string(i));
  for (std::size_t f = 0; f < grid.size(); ++f)
    hull.values[f] += body.rolling_radius * std::sqrt(1.0 + grid.coord(f).squaredNorm());
  return hull;
}

struct LimitRow {
  int i = 0;
  double cauchy_gap = std::numeric_limits<double>::quiet_NaN();  // sup_K |s_i - s_prev|
  double hessian_gap = std::numeric_limits<double>::quiet_NaN();
  double monotone_violation = std::numeric_limits<double>::quiet_NaN();  // max_K (s_prev - s_i)
  bool aborted = false;
};

struct LimitTable {
  std::vector<LimitRow> rows;
  double t_star = 0.0;
  double slack = 0.0;  // h^2 + dt

  bool monotone() const {
    for (const auto& r : rows)
      if (!std::isnan(r.monotone_violation) && r.monotone_violation > slack) return false;
    return true;
  }
  bool cauchy_decreasing() const {
    for (std::size_t k = 2; k < rows.size(); ++k)
      if (!(rows[k].cauchy_gap < rows[k - 1].cauchy_gap)) return false;
    return true;
  }
  double final_gap() const { return rows.size() < 2 ? 0.0 : rows.back().cauchy_gap; }
};

/// Evolves each approximant with frozen boundary data and compares the states
/// at t* = cfg.t_end on the compact node set K.
inline LimitTable limit_study(const NoncompactBodySpec& body, const std::vector<int>& i_list, const GridSpec& grid,
                              FlowConfig cfg, const std::vector<std::size_t>& K) {
  body.validate(grid);
  cfg.boundary = BoundaryData::frozen();
  LimitTable table;
  table.t_star = cfg.t_end;
  std::optional<SupportField> prev;
  double dt_max = 0.0;
  for (int i : i_list) {
    const Trajectory tr = evolve(exhaust_sequence(body, i, grid), cfg);
    dt_max = std::max(dt_max, detail::max_dt(tr));
    LimitRow row;
    row.i = i;
    row.aborted = tr.aborted;
    const SupportField& cur = tr.final();
    if (prev) {
      row.cauchy_gap = 0.0;
      row.hessian_gap = 0.0;
      row.monotone_violation = -std::numeric_limits<double>::infinity();
      for (std::size_t f : K) {
        row.cauchy_gap = std::max(row.cauchy_gap, std::abs(cur[f] - (*prev)[f]));
        row.monotone_violation = std::max(row.monotone_violation, (*prev)[f] - cur[f]);
        row.hessian_gap = std::max(row.hessian_gap, (hessian(cur, f) - hessian(*prev, f)).cwiseAbs().maxCoeff());
      }
    }
    table.rows.push_back(row);
    prev = cur;
  }
  table.slack = grid.h_max() * grid.h_max() + dt_max;
  return table;
}

// ---------------------------------------------------------------------------
// Masked domains
// ---------------------------------------------------------------------------

/// Unimodular image of Calabi's orthant soliton whose chart domain is the
/// simplex {y_i > -1, sum y_i < 1} (vertices at -1 and n on each axis).
inline SolitonOracle calabi_simplex_oracle(int n, double beta) {
  MatA At = MatA::Zero(n + 1, n + 1);
  for (int i = 0; i < n; ++i) {
    At(i, i) = -1.0;
    At(i, n) = 1.0;
  }
  for (int k = 0; k <= n; ++k) At(n, k) = 1.0;
  const double det = std::abs(At.determinant());
  At /= std::pow(det, 1.0 / (n + 1.0));
  return SolitonOracle::calabi(n, beta, AffineMap(At.transpose(), VecA::Zero(n + 1)));
}

/// Grid box on which every simplex vertex and face lies on grid nodes.
inline GridSpec calabi_simplex_grid(int n, int m) { return GridSpec::cube(n, -1.0, static_cast<double>(n), m); }

/// Euclidean distance in the chart from y to the nearest face of the cone
/// domain {A^T (y,-1) < 0}; negative outside.
inline double cone_face_distance(const SolitonOracle& o, const VecN& y) {
  const MatA At = o.map().A().transpose();
  const int n = static_cast<int>(y.size());
  const VecA z = At * chart_point(y);
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) d = std::min(d, -z(i) / At.row(i).head(n).norm());
  return d;
}

/// Grid nodes (one cell of margin) lying strictly inside the cone domain and
/// at least `min_distance` away from every face.
inline std::vector<std::size_t> cone_interior_nodes(const SolitonOracle& o, const GridSpec& g, double rel_tol = 1e-9,
                                                    double min_distance = 0.0) {
  std::vector<std::size_t> out;
  const double floor = std::max(min_distance, rel_tol * g.h_max());
  for (std::size_t f = 0; f < g.size(); ++f) {
    if (g.margin(f) < 1) continue;
    if (cone_face_distance(o, g.coord(f)) > floor) out.push_back(f);
  }
  return out;
}

/// Flags for nodes in the closed cone domain (faces included).
inline std::vector<char> cone_closure_mask(const SolitonOracle& o, const GridSpec& g, double rel_tol = 1e-9) {
  const MatA At = o.map().A().transpose();
  std::vector<char> in(g.size(), 0);
  for (std::size_t f = 0; f < g.size(); ++f) {
    const VecA z = At * chart_point(g.coord(f));
    in[f] = (z.array() <= rel_tol * g.h_max()).all() ? 1 : 0;
  }
  return in;
}

/// Oracle values on `nodes`, `fill` elsewhere.
inline SupportField masked_sample(const SolitonOracle& o, const GridSpec& g, double t,
                                  const std::vector<std::size_t>& nodes, double fill) {
  std::vector<double> v(g.size(), fill);
  for (std::size_t f : nodes) v[f] = o.chart_value(g.coord(f), t).value();
  return SupportField(g, std::move(v), t, to_string(o.kind()) + "_masked");
}

}  // namespace afflow
