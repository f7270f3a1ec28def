#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "afflow/estimates.hpp"
#include "afflow/flow.hpp"
#include "afflow/quadric.hpp"
#include "afflow/solitons.hpp"

namespace afflow::acceptance {

using nlohmann::json;

struct Options {
  /// Multiplies every upper-bound threshold; values far below 1 force failures
  /// (harness self-test).
  double tolerance_scale = 1.0;
};

struct Result {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string measured;
  std::string threshold;
  double seconds = 0.0;
  json detail = json::object();
  std::string note;
};

namespace detail {

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// Interior max of |s - exact| and of the same divided by exact.
struct TrackError {
  double abs = 0.0;
  double rel = 0.0;
};

inline TrackError track_error(const SupportField& s, const ChartFn& exact, const std::vector<std::size_t>& nodes) {
  TrackError e;
  for (std::size_t f : nodes) {
    const double ex = exact(s.grid.coord(f));
    const double d = std::abs(s[f] - ex);
    e.abs = std::max(e.abs, d);
    e.rel = std::max(e.rel, d / std::abs(ex));
  }
  return e;
}

inline FlowConfig adaptive_config(double t_end, BoundaryData bd, int record_every = 1 << 30) {
  FlowConfig cfg;
  cfg.dt_policy = DtPolicy::adaptive(0.5);
  cfg.t_end = t_end;
  cfg.boundary = std::move(bd);
  cfg.record_every = record_every;
  return cfg;
}

// n=2 unit sphere on [-1,1]^2 with oracle data, run to t = 1/3.
inline TrackError sphere_tracking(int m) {
  const auto o = SolitonOracle::sphere(2, 1.0);
  const auto g = GridSpec::cube(2, -1.0, 1.0, m);
  const double t_end = 1.0 / 3.0;
  const Trajectory tr = evolve(o.sample(g, 0.0), adaptive_config(t_end, BoundaryData::from_oracle(o)));
  const double r = sphere_radius(2, 1.0, t_end);
  return track_error(tr.final(), [r](const VecN& y) { return r * std::sqrt(1.0 + y.squaredNorm()); },
                     g.nodes_with_margin(1));
}

// Calabi simplex problem with exact data on the band within `band` of a face.
struct SimplexRun {
  GridSpec grid;
  SolitonOracle oracle;
  std::vector<std::size_t> active;
  Trajectory traj;
};

inline SimplexRun calabi_simplex_run(int m, double t0, double t_end, int frames, double band = 0.2) {
  auto g = calabi_simplex_grid(2, m);
  auto o = calabi_simplex_oracle(2, calabi_default_beta(2));
  auto act = cone_interior_nodes(o, g, 1e-9, band);
  auto s0 = masked_sample(o, g, t0, cone_interior_nodes(o, g), 0.0);
  FlowConfig cfg = adaptive_config(t_end, BoundaryData::from_oracle(o, 0.0));
  cfg.active = act;
  cfg.domain = cone_closure_mask(o, g);
  // estimate the step count from the first scan to hit roughly `frames` frames
  const auto sc = afflow::detail::scan(s0, act, &cfg.domain);
  const double h = g.h(0);
  const double dt0 = 0.5 * h * h * sc.dt_bound;
  cfg.record_every = std::max(1, static_cast<int>(t_end / dt0 / frames));
  Trajectory tr = evolve(s0, cfg);
  return {g, o, std::move(act), std::move(tr)};
}

}  // namespace detail

/// Shared state so criterion 5 can reuse the criterion 2 measurement.
class Suite {
 public:
  explicit Suite(Options opt = {}) : opt_(opt) {}

  static std::vector<std::pair<int, std::string>> catalogue() {
    return {{1, "soliton residual convergence"}, {2, "sphere tracking"},
            {3, "exact paraboloid transport"},   {4, "Calabi exponent resolution"},
            {5, "affine equivariance"},          {6, "cubic form decay"},
            {7, "comparison principle"},         {8, "Lie quadric"},
            {9, "ancient-solution classifier"},  {10, "speed-estimate profile"},
            {11, "Pogorelov quantity"},          {12, "exhaustion limit"}};
  }

  Result run(int id) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    r.id = id;
    for (const auto& [k, nm] : catalogue())
      if (k == id) r.name = nm;
    if (r.name.empty()) throw Error(ErrorKind::InvalidArgument, "no acceptance criterion " + std::to_string(id));
    try {
      switch (id) {
        case 1: c1(r); break;
        case 2: c2(r); break;
        case 3: c3(r); break;
        case 4: c4(r); break;
        case 5: c5(r); break;
        case 6: c6(r); break;
        case 7: c7(r); break;
        case 8: c8(r); break;
        case 9: c9(r); break;
        case 10: c10(r); break;
        case 11: c11(r); break;
        case 12: c12(r); break;
      }
    } catch (const std::exception& e) {
      r.pass = false;
      r.measured = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }

 private:
  double tol(double v) const { return v * opt_.tolerance_scale; }

  // 1. pde_residual on the sphere: second-order ratios; paraboloid exact.
  void c1(Result& r) {
    const auto o = SolitonOracle::sphere(2, 1.0);
    std::vector<double> res;
    for (int m : {33, 65, 129}) res.push_back(pde_residual(o, GridSpec::cube(2, -1, 1, m), 0.2, 1e-4).max);
    const double q1 = res[0] / res[1], q2 = res[1] / res[2];
    const auto p = SolitonOracle::paraboloid(2);
    double pres = 0.0;
    for (int m : {33, 65, 129}) pres = std::max(pres, pde_residual(p, GridSpec::cube(2, -1, 1, m), 0.2, 1e-4).max);
    r.pass = q1 >= 3.2 && q1 <= 4.8 && q2 >= 3.2 && q2 <= 4.8 && pres <= tol(1e-10);
    r.measured = "ratios " + detail::fmt(q1) + ", " + detail::fmt(q2) + "; paraboloid " + detail::fmt(pres, 3);
    r.threshold = "ratios in [3.2, 4.8]; paraboloid <= " + detail::fmt(tol(1e-10), 3);
    r.detail = {{"sphere_max_residual", res}, {"paraboloid_max_residual", pres}};
  }

  // 2. n=2 sphere with oracle data to t = 1/3.
  void c2(Result& r) {
    const double r13 = sphere_radius(2, 1.0, 1.0 / 3.0);
    const auto e65 = detail::sphere_tracking(65);
    const auto e129 = sphere129();
    r.pass = std::abs(r13 - 0.62996) < 1e-5 && e129.rel < tol(0.01) && e129.rel < e65.rel;
    r.measured = "rel err m=65 " + detail::fmt(e65.rel, 3) + ", m=129 " + detail::fmt(e129.rel, 3) +
                 "; r(1/3) = " + detail::fmt(r13, 6);
    r.threshold = "m=129 < " + detail::fmt(tol(0.01), 3) + " and decreasing";
    r.detail = {{"rel", {e65.rel, e129.rel}}, {"abs", {e65.abs, e129.abs}}, {"r_one_third", r13}};
  }

  // 3. Euler is exact for the paraboloid's constant speed.
  void c3(Result& r) {
    const auto o = SolitonOracle::paraboloid(2);
    const auto g = GridSpec::cube(2, -1, 1, 33);
    FlowConfig cfg;
    cfg.dt_policy = DtPolicy::fixed(1e-3);
    cfg.t_end = 1.0;
    cfg.boundary = BoundaryData::from_oracle(o);
    cfg.record_every = 1 << 30;
    const Trajectory tr = evolve(o.sample(g, 0.0), cfg);
    const auto e = detail::track_error(tr.final(), o.at_time(1.0), g.nodes_with_margin(1));
    r.pass = e.abs <= tol(1e-10) && std::abs(tr.final().time - 1.0) < 1e-12;
    r.measured = "max error " + detail::fmt(e.abs, 3) + " after " + std::to_string(tr.dts.size()) + " steps";
    r.threshold = "<= " + detail::fmt(tol(1e-10), 3);
  }

  // 4. n=1 Calabi residual with beta = 3/2 versus the printed exponent 3.
  void c4(Result& r) {
    auto residuals = [](double beta) {
      std::vector<double> out;
      for (int m : {33, 65, 129})
        out.push_back(pde_residual(SolitonOracle::calabi(1, beta), GridSpec::cube(1, -2.0, -0.5, m), 1.0, 1e-4).max);
      return out;
    };
    const auto good = residuals(1.5);
    const auto bad = residuals(3.0);
    const double q1 = good[0] / good[1], q2 = good[1] / good[2];
    const bool good_ok = q1 >= 3.2 && q1 <= 4.8 && q2 >= 3.2 && q2 <= 4.8;
    const double bad_floor = *std::min_element(bad.begin(), bad.end());
    const bool bad_ok = bad_floor > 0.1 && bad[2] > 0.5 * bad[0];
    r.pass = good_ok && bad_ok;
    r.measured = "beta=3/2 ratios " + detail::fmt(q1) + ", " + detail::fmt(q2) + "; beta=3 residual >= " +
                 detail::fmt(bad_floor, 3);
    r.threshold = "ratios in [3.2, 4.8]; beta=3 bounded away from 0 (> 0.1, not decaying)";
    r.detail = {{"beta_3_2", good}, {"beta_3", bad}};
    r.note = "time exponent (n+2)/2 is the one consistent with c_n; the printed (n+2)/n fails the residual check";
  }

  // 5. Projective shear of the chart (x1 += 0.2 x2) on the n=1 unit circle.
  void c5(Result& r) {
    const int m = 129;
    const double kappa = 0.2;
    const auto o = SolitonOracle::sphere(1, 1.0);
    const double T = o.extinction_time() / 4.0;
    MatA A(2, 2);
    A << 1.0, kappa, 0.0, 1.0;
    const AffineMap M(A, VecA::Zero(2));
    const auto oe = SolitonOracle::ellipsoid(1.0, M);
    const auto gT = GridSpec::cube(1, -1.0, 1.0, m);
    const double h = gT.h(0);
    const int extra = static_cast<int>(std::ceil(0.6 / h));
    const auto gS = GridSpec::cube(1, -1.0 - extra * h, 1.0 + extra * h, m + 2 * extra);

    const SupportField flowed = evolve(o.sample(gS, 0.0), detail::adaptive_config(T, BoundaryData::from_oracle(o))).final();
    const SupportField flow_then_map = apply_affine(flowed, M, gT);
    const SupportField mapped0 = apply_affine(o.sample(gS, 0.0), M, gT);
    const SupportField map_then_flow = evolve(mapped0, detail::adaptive_config(T, BoundaryData::from_oracle(oe))).final();
    double mismatch = 0.0;
    for (std::size_t f : gT.nodes_with_margin(1)) mismatch = std::max(mismatch, std::abs(flow_then_map[f] - map_then_flow[f]));
    const double ref = sphere129().abs;
    r.pass = mismatch <= tol(3.0 * ref);
    r.measured = "mismatch " + detail::fmt(mismatch, 3);
    r.threshold = "<= 3 x criterion-2 abs error (" + detail::fmt(ref, 3) + ") = " + detail::fmt(tol(3.0 * ref), 3);
    r.detail = {{"mismatch", mismatch}, {"reference_abs_error", ref}, {"shear", kappa}, {"t", T}};
  }

  // 6. |C|^2 decay on the Calabi simplex and near-zero ratio on quadric oracles.
  void c6(Result& r) {
    const double t0 = 0.01;
    auto run = detail::calabi_simplex_run(129, t0, 1.0 - t0, 40);
    std::vector<std::size_t> K;
    for (std::size_t f : run.active)
      if (run.grid.margin(f) >= 2 && cone_face_distance(run.oracle, run.grid.coord(f)) >= 0.25) K.push_back(f);
    const auto rep = cubic_decay_monitor(run.traj, K, 0.0, 0.15, 0.1, 1.0);
    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < rep.times.size(); ++k)
      if (rep.times[k] >= 0.1) min_ratio = std::min(min_ratio, rep.ratio[k]);
    const auto exact = run.oracle.at_time(run.traj.final().time);
    const auto err = detail::track_error(run.traj.final(), exact, run.active);

    auto quadric_sup = [](const SolitonOracle& o, const GridSpec& g, std::vector<double> times) {
      Trajectory tr;
      for (double t : times) tr.frames.push_back(o.sample(g, t));
      return cubic_decay_monitor(tr, {}, 0.0, 0.15, times.front(), times.back()).sup;
    };
    const auto gq = GridSpec::cube(2, -1, 1, 129);
    const double sphere_sup = quadric_sup(SolitonOracle::sphere(2, 1.0), gq, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
    const double parab_sup = quadric_sup(SolitonOracle::paraboloid(2), gq, {0.1, 0.25, 0.5, 0.75, 1.0});

    r.pass = rep.sup <= 1.0 + tol(0.15) && min_ratio > 0.0 && sphere_sup <= tol(0.05) && parab_sup <= tol(0.05);
    r.measured = "Calabi sup " + detail::fmt(rep.sup) + " (min " + detail::fmt(min_ratio) + "); sphere " +
                 detail::fmt(sphere_sup, 3) + ", paraboloid " + detail::fmt(parab_sup, 3);
    r.threshold = "Calabi <= " + detail::fmt(1.0 + tol(0.15)) + "; quadrics <= " + detail::fmt(tol(0.05), 3);
    r.detail = {{"calabi_sup", rep.sup},
                {"calabi_min", min_ratio},
                {"exact_ratio", 1.0 / 3.0},
                {"tracking_abs_error", err.abs},
                {"monitored_nodes", K.size()},
                {"sphere_sup", sphere_sup},
                {"paraboloid_sup", parab_sup}};
    r.note = "monitored on the compact set at face distance >= 0.25; band of width 0.2 carries exact data";
  }

  // 7. Ellipsoid barrier lifted to touch a generic field stays below it.
  void c7(Result& r) {
    std::vector<double> C, viol;
    double swapped = 0.0, swapped_scale = 0.0;
    for (int m : {33, 65, 129}) {
      const auto g = GridSpec::cube(2, -1, 1, m);
      const SupportField up = SupportField::sample(g, generic_field(), 0.0, "generic");
      VecA v = VecA::Zero(3);
      const SupportField e0 = ellipsoid_barrier(0.8, v, 2.0, g);
      double lift = -std::numeric_limits<double>::infinity();
      for (std::size_t f = 0; f < g.size(); ++f) lift = std::max(lift, e0[f] - up[f]);
      v(2) = lift;  // <v,(y,-1)> = -lift: barrier now touches from below
      const auto lower = SolitonOracle::ellipsoid_barrier(0.8, v, 2.0);
      const Trajectory tr = evolve(up, detail::adaptive_config(0.2, BoundaryData::frozen(), std::max(1, m * m / 40)));
      const auto rep = barrier_monitor(lower, tr);
      C.push_back(rep.constant());
      viol.push_back(rep.violation());
      Trajectory oracle_tr;
      for (const auto& fr : tr.frames) oracle_tr.frames.push_back(lower.sample(g, fr.time));
      oracle_tr.dts = tr.dts;
      const auto sw = barrier_monitor(tr, oracle_tr);
      swapped = sw.violation();
      swapped_scale = sw.scale;
    }
    const double cmax = *std::max_element(C.begin(), C.end());
    const bool stable = C.back() <= 1.5 * C[1] + 1e-9;
    r.pass = cmax <= tol(1.0) && stable && swapped > swapped_scale;
    r.measured = "C = " + detail::fmt(C[0], 3) + ", " + detail::fmt(C[1], 3) + ", " + detail::fmt(C[2], 3) +
                 "; swapped violation " + detail::fmt(swapped, 3);
    r.threshold = "C <= " + detail::fmt(tol(1.0), 3) + ", not growing; swapped > h^2+dt";
    r.detail = {{"C", C}, {"violation", viol}, {"swapped_violation", swapped}};
  }

  // 8. Lie quadric of the unit sphere at the south pole.
  void c8(Result& r) {
    struct Out {
      double phi_max, phi_origin, a, control;
    };
    auto measure = [](int m) {
      const auto g = GridSpec::cube(2, -1, 1, m);
      const SupportField s = SolitonOracle::sphere(2, 1.0).sample(g, 0.0);
      const SupportField sg = SupportField::sample(g, generic_field(), 0.0, "generic");
      std::vector<std::size_t> sub;
      const auto inner = g.nodes_with_margin(2);
      for (std::size_t i = 0; i < inner.size(); i += 7) sub.push_back(inner[i]);
      const auto fit = affine_sphere_check(s, sub);
      const auto fitg = affine_sphere_check(sg, sub);
      const std::size_t y0 = g.nearest(VecN::Zero(2));
      const AffineFrame fr = affine_frame(s, y0), frg = affine_frame(sg, y0);
      // same 50 physical nodes at every resolution: indices on the m=129 lattice
      std::mt19937_64 rng(7);
      std::uniform_int_distribution<int> pick(2, 126);
      const int sc = (m - 1) / 128;
      double mx = 0.0, mg = 0.0;
      for (int k = 0; k < 50; ++k) {
        const int i = pick(rng), j = pick(rng);
        const std::size_t f = g.flat({i * sc, j * sc, 0});
        mx = std::max(mx, std::abs(lie_quadric_phi(fr, embedding_point(s, f), fit.a)));
        mg = std::max(mg, std::abs(lie_quadric_phi(frg, embedding_point(sg, f), fitg.a)));
      }
      return Out{mx, lie_quadric_phi(fr, VecA::Zero(3), fit.a), fit.a, mg};
    };
    const Out a = measure(129), b = measure(257);
    const double fall = a.phi_max / b.phi_max;
    r.pass = a.phi_max <= tol(5e-4) && fall >= 3.2 && fall <= 4.8 && std::abs(a.phi_origin + 1.0) <= tol(1e-3) &&
             a.control >= 10.0 * a.phi_max;
    r.measured = "max|Phi| " + detail::fmt(a.phi_max, 3) + " -> " + detail::fmt(b.phi_max, 3) + " (x" +
                 detail::fmt(fall, 3) + "); Phi(origin) " + detail::fmt(a.phi_origin, 6) + "; control " +
                 detail::fmt(a.control, 3);
    r.threshold = "<= " + detail::fmt(tol(5e-4), 3) + ", fall in [3.2, 4.8], |Phi(0)+1| <= " +
                  detail::fmt(tol(1e-3), 3) + ", control >= 10x";
    r.detail = {{"a", {a.a, b.a}}, {"phi_max", {a.phi_max, b.phi_max}}, {"control", a.control}};
  }

  // 9. Quadric classification of exact samples and the affine-sphere constant.
  void c9(Result& r) {
    const auto g = GridSpec::cube(2, -1, 1, 65);
    std::vector<std::size_t> sub;
    const auto inner = g.nodes_with_margin(2);
    for (std::size_t i = 0; i < inner.size(); i += 13) sub.push_back(inner[i]);
    auto points = [&](const SolitonOracle& o) {
      std::vector<VecA> pts;
      for (std::size_t f : sub) pts.push_back(o.surface_point(g.coord(f), 0.0));
      return pts;
    };
    MatA A(3, 3);
    A << 2.0, 0.3, 0.0, 0.0, 0.5, 0.1, 0.0, 0.0, 1.0;
    const auto q_s = fit_quadric_classify(points(SolitonOracle::sphere(2, 1.0)));
    const auto q_e = fit_quadric_classify(points(SolitonOracle::ellipsoid(1.0, AffineMap(A, VecA::Zero(3)))));
    const auto q_p = fit_quadric_classify(points(SolitonOracle::paraboloid(2)));
    const double res = std::max({q_s.residual, q_e.residual, q_p.residual});
    const bool labels = q_s.classification == QuadricClass::Ellipsoid &&
                        q_e.classification == QuadricClass::Ellipsoid &&
                        q_p.classification == QuadricClass::Paraboloid;
    std::vector<double> a_s, dev_s;
    double a_p = 0.0, dev_p = 0.0;
    for (int m : {65, 129}) {
      const auto gm = GridSpec::cube(2, -1, 1, m);
      std::vector<std::size_t> nodes;
      const auto in = gm.nodes_with_margin(2);
      for (std::size_t i = 0; i < in.size(); i += 7) nodes.push_back(in[i]);
      const auto fs = affine_sphere_check(SolitonOracle::sphere(2, 1.0).sample(gm, 0.0), nodes);
      const auto fp = affine_sphere_check(SolitonOracle::paraboloid(2).sample(gm, 0.0), nodes);
      a_s.push_back(fs.a);
      dev_s.push_back(fs.deviation);
      a_p = fp.a;
      dev_p = std::max(dev_p, fp.deviation);
    }
    r.pass = labels && res <= tol(1e-8) && std::abs(a_s.back() + 1.0) <= tol(0.02) && std::abs(a_p) <= tol(0.02) &&
             dev_s[1] < dev_s[0] && dev_p <= 1e-8;
    r.measured = std::string(labels ? "labels ok" : "labels wrong") + "; residual " + detail::fmt(res, 3) +
                 "; a sphere " + detail::fmt(a_s.back(), 6) + ", paraboloid " + detail::fmt(a_p, 3) +
                 "; deviation " + detail::fmt(dev_s[0], 3) + " -> " + detail::fmt(dev_s[1], 3);
    r.threshold = "residual <= " + detail::fmt(tol(1e-8), 3) + "; |a - a*| <= " + detail::fmt(tol(0.02), 3) +
                  "; deviation decreasing";
    r.detail = {{"sphere", to_string(q_s.classification)},
                {"ellipsoid", to_string(q_e.classification)},
                {"paraboloid", to_string(q_p.classification)},
                {"a_sphere", a_s},
                {"deviation_sphere", dev_s}};
  }

  // 10. Speed quantity: q(0) against 2 and a refinement-stable profile.
  void c10(Result& r) {
    const auto o = SolitonOracle::sphere(2, 1.0);
    const double delta = 0.01;
    double q0 = 0.0;
    {
      const auto g = GridSpec::cube(2, -1, 1, 65);
      const Trajectory tr = evolve(o.sample(g, 0.0), detail::adaptive_config(2e-3, BoundaryData::from_oracle(o), 1));
      q0 = speed_monitor(tr, 1.0 - delta).Q.front();
    }
    const double T = o.extinction_time();
    const double rf = (1.0 - delta) * sphere_radius(2, 1.0, T / 2.0);
    std::vector<double> sups;
    for (int m : {33, 65}) {
      const auto g = GridSpec::cube(2, -1, 1, m);
      const Trajectory tr =
          evolve(o.sample(g, 0.0), detail::adaptive_config(T / 2.0, BoundaryData::from_oracle(o), m * m / 16));
      sups.push_back(speed_monitor(tr, rf).sup_profile(2, 1e-3, T / 2.0));
    }
    const double drift = std::abs(sups[1] - sups[0]) / sups[0];
    r.pass = std::abs(q0 - 2.0) <= 2.0 * delta + tol(1e-3) && std::abs(q0 - 2.0 / (1.0 + delta)) <= tol(1e-3) &&
             std::isfinite(sups[1]) && drift <= tol(0.2);
    r.measured = "q(0) " + detail::fmt(q0, 6) + "; sup profile " + detail::fmt(sups[0]) + " -> " +
                 detail::fmt(sups[1]) + " (drift " + detail::fmt(drift, 3) + ")";
    r.threshold = "|q(0) - 2/(1+delta)| <= " + detail::fmt(tol(1e-3), 3) + "; drift <= " + detail::fmt(tol(0.2), 3);
    r.detail = {{"q0", q0}, {"delta", delta}, {"r_floor_profile", rf}, {"sup_profile", sups}};
    r.note = "profile floor is (1-delta) r(T_ext/2) because the sphere drops below 1-delta at once";
  }

  // 11. Pogorelov quantity on the Calabi simplex bowl at level -0.05.
  void c11(Result& r) {
    std::vector<double> mx;
    bool interior = true, closed = true, nested = true;
    double boundary = 0.0;
    for (int m : {65, 129}) {
      const auto run = pogorelov_run(m);
      const std::size_t x = run.grid.nearest(VecN::Zero(2));
      const Trajectory nt = normalize_section(run.traj, x);
      const BowlDomain bowl = bowl_domain(nt, -0.05, run.active);
      VecN beta(2);
      beta << 1.0, 0.0;
      const auto rep = pogorelov_monitor(nt, bowl, beta);
      mx.push_back(rep.max);
      interior = interior && rep.interior;
      closed = closed && !rep.truncated;
      nested = nested && bowl.nested;
      boundary = std::max(boundary, rep.boundary_max);
    }
    const double change = std::abs(mx[1] - mx[0]) / mx[0];
    r.pass = interior && closed && nested && boundary == 0.0 && change < tol(0.2);
    r.measured = "max w " + detail::fmt(mx[0]) + " -> " + detail::fmt(mx[1]) + " (change " + detail::fmt(change, 3) +
                 "); interior " + (interior ? "yes" : "no") + "; boundary max " + detail::fmt(boundary, 3);
    r.threshold = "interior max, w = 0 on parabolic boundary, change < " + detail::fmt(tol(0.2), 3);
    r.detail = {{"max_w", mx}, {"nested", nested}, {"closed", closed}};
    r.note = "bowl over t in [0.01, 0.028]: the top slice stays inside the evolved region";
  }

  // 12. Exhaustion of the paraboloid by thickened caps, n=1.
  void c12(Result& r) {
    const auto g = GridSpec::cube(1, -4.0, 4.0, 257);
    const auto body = NoncompactBodySpec::paraboloid(1, g.h(0), 0.25, 0.5);
    FlowConfig cfg = detail::adaptive_config(0.25, BoundaryData::frozen());
    std::vector<std::size_t> K;
    for (std::size_t f : g.nodes_with_margin(1))
      if (std::abs(g.coord(f)(0)) <= 1.0) K.push_back(f);
    const LimitTable t = limit_study(body, {2, 4, 8, 16}, g, cfg, K);
    std::vector<double> gaps;
    for (const auto& row : t.rows)
      if (!std::isnan(row.cauchy_gap)) gaps.push_back(row.cauchy_gap);
    r.pass = t.monotone() && t.cauchy_decreasing() && t.final_gap() <= tol(1e-3);
    std::string g_s;
    for (double v : gaps) g_s += (g_s.empty() ? "" : ", ") + detail::fmt(v, 3);
    r.measured = "Cauchy gaps " + g_s + "; monotone " + (t.monotone() ? "yes" : "no");
    r.threshold = "strictly decreasing, final <= " + detail::fmt(tol(1e-3), 3) + ", monotone within h^2+dt";
    r.detail = {{"gaps", gaps}, {"slack", t.slack}};
  }

  static ChartFn generic_field() {
    return [](const VecN& y) {
      return std::sqrt(1.0 + y.squaredNorm()) + 0.3 * y.squaredNorm() + 0.1 * y(0) * y(0) * y(0) +
             0.05 * y(1) * y(1) * y(0);
    };
  }

  detail::SimplexRun pogorelov_run(int m) {
    auto g = calabi_simplex_grid(2, m);
    auto o = calabi_simplex_oracle(2, calabi_default_beta(2));
    auto act = cone_interior_nodes(o, g, 1e-9, 0.2);
    auto s0 = masked_sample(o, g, 0.01, cone_interior_nodes(o, g), 0.0);
    // the step count grows like m^2; keep the recorded frame count fixed
    FlowConfig cfg = detail::adaptive_config(0.018, BoundaryData::from_oracle(o, 0.0), std::max(1, (m / 65) * (m / 65) * 200));
    cfg.active = act;
    cfg.domain = cone_closure_mask(o, g);
    Trajectory tr = evolve(s0, cfg);
    return {g, o, std::move(act), std::move(tr)};
  }

  detail::TrackError sphere129() {
    if (!sphere129_) sphere129_ = detail::sphere_tracking(129);
    return *sphere129_;
  }

  Options opt_;
  std::optional<detail::TrackError> sphere129_;
};

inline std::string format_line(const Result& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << "  [" << std::setw(2) << r.id << "] " << r.name << ": " << r.measured
     << "  (threshold: " << r.threshold << ")  " << std::fixed << std::setprecision(1) << r.seconds << "s";
  return os.str();
}

inline json to_json(const Result& r) {
  return {{"criterion", r.id}, {"name", r.name},         {"pass", r.pass},    {"measured", r.measured},
          {"threshold", r.threshold}, {"seconds", r.seconds}, {"detail", r.detail}, {"note", r.note}};
}

}  // namespace afflow::acceptance
