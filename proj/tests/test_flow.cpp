#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace afflow;
using afflow::test::v;
using afflow::test::va;

namespace {

FlowConfig fixed_cfg(double dt, double t_end, BoundaryData bd, int record_every = 1) {
  FlowConfig c;
  c.dt_policy = DtPolicy::fixed(dt);
  c.t_end = t_end;
  c.boundary = std::move(bd);
  c.record_every = record_every;
  return c;
}

FlowConfig adaptive_cfg(double t_end, BoundaryData bd, int record_every = 1) {
  FlowConfig c;
  c.dt_policy = DtPolicy::adaptive(0.5);
  c.t_end = t_end;
  c.boundary = std::move(bd);
  c.record_every = record_every;
  return c;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no afflow::Error thrown";
  return ErrorKind::InvalidArgument;
}

GridSpec interval(double lo, double hi, int m) {
  std::array<double, kMaxDim> a{}, b{};
  a[0] = lo;
  b[0] = hi;
  return GridSpec(1, a, b, m);
}

}  // namespace

TEST(Step, ParaboloidMovesByExactlyDt) {
  const SolitonOracle p = SolitonOracle::paraboloid(2);
  const SupportField s = p.sample(GridSpec::cube(2, -1, 1, 17), 0.0);
  const SupportField n = step(s, 1e-3, BoundaryData::from_oracle(p));
  EXPECT_DOUBLE_EQ(n.time, 1e-3);
  for (std::size_t f = 0; f < s.grid.size(); ++f) EXPECT_NEAR(n[f], s[f] - 1e-3, 1e-14);
}

TEST(Step, ConcaveInputIsDegenerate) {
  SupportField s = test::field(2, -1, 1, 17, test::unit_sphere);
  for (double& x : s.values) x = -x;
  EXPECT_EQ(kind_of([&] { step(s, 1e-4, BoundaryData::frozen()); }), ErrorKind::DegenerateHessian);
  EXPECT_EQ(kind_of([&] { step(test::field(2, -1, 1, 17, test::unit_sphere), 0.0, BoundaryData::frozen()); }),
            ErrorKind::InvalidArgument);
}

TEST(Step, SphereOneStepMatchesOracle) {
  const SolitonOracle o = SolitonOracle::sphere(2, 1.0);
  const GridSpec g = GridSpec::cube(2, -1, 1, 65);
  const double dt = 1e-5;
  const SupportField n = step(o.sample(g, 0.0), dt, BoundaryData::from_oracle(o));
  const SupportField exact = o.sample(g, dt);
  double err = 0.0;
  for (std::size_t f = 0; f < g.size(); ++f) err = std::max(err, std::abs(n[f] - exact[f]));
  const double h2 = g.h_max() * g.h_max();
  EXPECT_LT(err, dt * dt + 5.0 * h2 * dt);
}

TEST(Step, GuardRejectsConvexityLoss) {
  // a huge step turns the nearly flat shoulder of the sphere concave
  const SupportField s = test::field(1, -3, 3, 33, test::unit_sphere);
  EXPECT_EQ(kind_of([&] { step(s, 50.0, BoundaryData::frozen()); }), ErrorKind::ConvexityLost);
  EXPECT_NO_THROW(step(s, 50.0, BoundaryData::frozen(), {}, false));
}

TEST(Evolve, ParaboloidFixedDtIsExact) {
  const SolitonOracle p = SolitonOracle::paraboloid(2);
  const SupportField s0 = p.sample(GridSpec::cube(2, -1, 1, 17), 0.0);
  const Trajectory tr = evolve(s0, fixed_cfg(0.01, 0.3, BoundaryData::from_oracle(p), 4));
  ASSERT_FALSE(tr.aborted);
  EXPECT_NEAR(tr.final().time, 0.3, 1e-14);
  for (std::size_t f = 0; f < s0.grid.size(); ++f) EXPECT_NEAR(tr.final()[f], s0[f] - 0.3, 1e-12);
  for (std::size_t k = 1; k < tr.frames.size(); ++k) EXPECT_GT(tr.frames[k].time, tr.frames[k - 1].time);
  double sum = 0.0;
  for (double d : tr.dts) sum += d;
  EXPECT_NEAR(sum, 0.3, 1e-13);
}

TEST(Evolve, TEndIsADurationFromInitialTime) {
  const SolitonOracle p = SolitonOracle::paraboloid(1);
  const SupportField s0 = p.sample(interval(-1, 1, 17), 0.5);
  const Trajectory tr = evolve(s0, fixed_cfg(0.01, 0.1, BoundaryData::from_oracle(p)));
  EXPECT_NEAR(tr.final().time, 0.6, 1e-14);
}

TEST(Evolve, SphereTracksOracleToHalfExtinction) {
  const SolitonOracle o = SolitonOracle::sphere(2, 1.0);
  const GridSpec g = GridSpec::cube(2, -1, 1, 33);
  const double T = o.extinction_time() / 2.0;
  const Trajectory tr = evolve(o.sample(g, 0.0), adaptive_cfg(T, BoundaryData::from_oracle(o), 1000));
  ASSERT_FALSE(tr.aborted);
  ASSERT_FALSE(tr.events.empty());
  EXPECT_EQ(tr.events.front().kind, "dt_policy");
  const SupportField exact = o.sample(g, tr.final().time);
  double err = 0.0, scale = 0.0;
  for (std::size_t f : g.interior_nodes()) {
    err = std::max(err, std::abs(tr.final()[f] - exact[f]));
    scale = std::max(scale, std::abs(exact[f]));
  }
  EXPECT_LT(err / scale, 0.01);
  // every recorded frame stays convex with the guard on
  for (const auto& fr : tr.frames) EXPECT_TRUE(convexity_check(fr).admissible());
}

TEST(Evolve, InteriorValuesStrictlyDecrease) {
  const SupportField s0 = test::field(2, -1, 1, 17, test::generic);
  const Trajectory tr = evolve(s0, adaptive_cfg(0.02, BoundaryData::frozen()));
  for (std::size_t k = 1; k < tr.frames.size(); ++k)
    for (std::size_t f : s0.grid.interior_nodes()) EXPECT_LT(tr.frames[k][f], tr.frames[k - 1][f]);
}

TEST(Evolve, DeterministicBitForBit) {
  const SupportField s0 = test::field(2, -1, 1, 17, test::generic);
  const FlowConfig c = adaptive_cfg(0.03, BoundaryData::frozen(), 3);
  const Trajectory a = evolve(s0, c), b = evolve(s0, c);
  ASSERT_EQ(a.frames.size(), b.frames.size());
  EXPECT_EQ(a.dts, b.dts);
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    EXPECT_EQ(a.frames[k].time, b.frames[k].time);
    EXPECT_EQ(a.frames[k].values, b.frames[k].values);
  }
}

// evolve refreshes only the stencil halo per step; recorded frames must still
// equal a plain loop of step() with full boundary overwrite
TEST(Evolve, RecordedFramesEqualManualStepping) {
  const SolitonOracle o = SolitonOracle::sphere(2, 1.0);
  const SupportField s0 = o.sample(GridSpec::cube(2, -1, 1, 17), 0.0);
  const BoundaryData bd = BoundaryData::from_oracle(o);
  const Trajectory tr = evolve(s0, fixed_cfg(1e-4, 20e-4, bd));
  ASSERT_EQ(tr.frames.size(), tr.dts.size() + 1);
  SupportField cur = s0;
  for (std::size_t k = 0; k < tr.dts.size(); ++k) {
    cur = step(cur, tr.dts[k], bd);
    EXPECT_EQ(cur.values, tr.frames[k + 1].values) << "frame " << k + 1;
  }
}

TEST(Evolve, TranslationCommutesWithFlow) {
  const VecA b = va({0.2, -0.3, 0.1});
  const SolitonOracle o0 = SolitonOracle::sphere(2, 1.0);
  const SolitonOracle ob = SolitonOracle::sphere(2, 1.0, b);
  const GridSpec g = GridSpec::cube(2, -1, 1, 17);
  const FlowConfig c0 = fixed_cfg(2e-4, 0.02, BoundaryData::from_oracle(o0), 50);
  const FlowConfig cb = fixed_cfg(2e-4, 0.02, BoundaryData::from_oracle(ob), 50);
  const Trajectory a = evolve(o0.sample(g, 0.0), c0), t = evolve(ob.sample(g, 0.0), cb);
  for (std::size_t f = 0; f < g.size(); ++f)
    EXPECT_NEAR(t.final()[f] - a.final()[f], b.dot(chart_point(g.coord(f))), 1e-12);
}

TEST(Evolve, QuarterTurnEquivariance) {
  // A = rot90 (+) 1 is unimodular and maps the square grid onto itself
  MatA A = MatA::Identity(3, 3);
  A(0, 0) = 0;
  A(0, 1) = -1;
  A(1, 0) = 1;
  A(1, 1) = 0;
  const AffineMap M(A, VecA::Zero(3));
  const GridSpec g = GridSpec::cube(2, -1, 1, 17);
  const FlowConfig c = fixed_cfg(1e-4, 0.01, BoundaryData::frozen(), 100);
  const Trajectory a = evolve(SupportField::sample(g, test::generic), c);
  const Trajectory b = evolve(SupportField::sample(g, apply_affine(ChartFn(test::generic), M)), c);
  for (std::size_t f = 0; f < g.size(); ++f) {
    const VecA z = A.transpose() * chart_point(g.coord(f));
    const std::size_t src = g.nearest(VecN(z.head(2)));
    EXPECT_NEAR(b.final()[f], a.final()[src], 1e-11);
  }
}

TEST(Evolve, AdaptiveStepsRespectTheStabilityBound) {
  const SupportField s0 = test::field(2, -1, 1, 17, test::generic);
  const Trajectory tr = evolve(s0, adaptive_cfg(0.01, BoundaryData::frozen()));
  const double h = s0.grid.h_max();
  const double bound = 0.5 * h * h * detail::scan(s0, s0.grid.nodes_with_margin(1), nullptr).dt_bound;
  EXPECT_NEAR(tr.dts.front(), std::min(bound, 0.01), 1e-15);
}

TEST(FlowConfig, Validation) {
  FlowConfig c = fixed_cfg(-1e-3, 1.0, BoundaryData::frozen());
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::ConfigInvalid);
  c = adaptive_cfg(1.0, BoundaryData::frozen());
  c.dt_policy.cfl = 0.6;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::ConfigInvalid);
  c.dt_policy.cfl = 0.5;
  EXPECT_NO_THROW(c.validate());
  c.t_end = 0.0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::ConfigInvalid);
  c.t_end = 1.0;
  c.record_every = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::ConfigInvalid);
  c.record_every = 1;
  c.boundary.mode = BoundaryData::Mode::Oracle;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::ConfigInvalid);
  c.boundary = BoundaryData::constant_value(0.0);
  c.domain.assign(3, 1);
  EXPECT_EQ(kind_of([&] { evolve(test::field(1, -1, 1, 17, test::unit_sphere), c); }), ErrorKind::InvalidArgument);
}

TEST(Barrier, IdenticalInputsGiveZero) {
  const Trajectory tr = evolve(test::field(2, -1, 1, 17, test::generic), adaptive_cfg(0.01, BoundaryData::frozen(), 5));
  const BarrierReport r = barrier_monitor(tr, tr);
  EXPECT_EQ(r.worst, 0.0);
  EXPECT_EQ(r.violation(), 0.0);
  EXPECT_EQ(r.times.size(), tr.frames.size());
}

TEST(Barrier, ComparisonPrincipleAndSwappedControl) {
  const GridSpec g = GridSpec::cube(2, -1, 1, 17);
  const SupportField a = SupportField::sample(g, test::unit_sphere);
  const SupportField b =
      SupportField::sample(g, [](const VecN& y) { return test::unit_sphere(y) + 0.05 + 0.02 * y.squaredNorm(); });
  const FlowConfig c = fixed_cfg(2e-4, 0.05, BoundaryData::frozen(), 25);
  const Trajectory ta = evolve(a, c), tb = evolve(b, c);
  const BarrierReport ok = barrier_monitor(ta, tb);
  EXPECT_TRUE(ok.pass(1.0));
  const BarrierReport swapped = barrier_monitor(tb, ta);
  EXPECT_FALSE(swapped.pass(1.0));
  EXPECT_GT(swapped.violation(), 0.04);
}

TEST(Barrier, InnerSphereOracleStaysBelowGenericFlow) {
  const GridSpec g = GridSpec::cube(2, -1, 1, 33);
  const Trajectory tr = evolve(SupportField::sample(g, test::generic), adaptive_cfg(0.1, BoundaryData::frozen(), 50));
  ASSERT_FALSE(tr.aborted);
  EXPECT_TRUE(barrier_monitor(SolitonOracle::sphere(2, 0.9), tr).pass(1.0));
  // a sphere that starts above the body is flagged
  EXPECT_FALSE(barrier_monitor(SolitonOracle::sphere(2, 2.0), tr).pass(10.0));
}

TEST(Barrier, MismatchedTimesRejected) {
  const SupportField s0 = test::field(1, -1, 1, 17, test::unit_sphere);
  const Trajectory a = evolve(s0, fixed_cfg(1e-3, 0.01, BoundaryData::frozen()));
  const Trajectory b = evolve(s0, fixed_cfg(1e-3, 0.01, BoundaryData::frozen(), 2));
  EXPECT_EQ(kind_of([&] { barrier_monitor(a, b); }), ErrorKind::InvalidArgument);
}

TEST(EllipsoidBarrierField, ExamplesAndConvexity) {
  const GridSpec g = GridSpec::cube(2, -1, 1, 17);
  const SupportField e = ellipsoid_barrier(1.0, VecA::Zero(3), 1.0, g);
  EXPECT_NEAR(e[g.nearest(v({0, 0}))], 0.0, 1e-15);
  for (double j : {1.0, 3.0, 10.0}) {
    const SupportField s = ellipsoid_barrier(0.5, va({0.1, 0.2, 0.3}), j, g);
    EXPECT_TRUE(convexity_check(s).admissible()) << j;
    const VecN y = v({0.25, -0.5});
    EXPECT_NEAR(s[g.nearest(y)], 0.5 * std::sqrt(y.squaredNorm() + j * j) + 0.1 * y(0) + 0.2 * y(1) - 0.3 - j, 1e-13);
  }
}

TEST(Exhaust, NestedBelowTheBody) {
  const GridSpec g = interval(-4, 4, 129);
  const NoncompactBodySpec body = NoncompactBodySpec::paraboloid(1, g.h(0), 0.25, 0.5);
  const SupportField s1 = exhaust_sequence(body, 1, g), s2 = exhaust_sequence(body, 2, g),
                     s8 = exhaust_sequence(body, 8, g);
  for (std::size_t f = 0; f < g.size(); ++f) {
    const double s = body.support(g.coord(f));
    EXPECT_LE(s1[f], s2[f] + 1e-12);
    EXPECT_LE(s2[f], s8[f] + 1e-12);
    EXPECT_LE(s8[f], s + 1e-12);
  }
  const std::size_t edge = g.nearest(v({0.9 * 4}));
  EXPECT_LT(s1[edge], body.support(g.coord(edge)) - 1.0);
  // near the origin a large cap reproduces |y|^2/2 up to lattice sampling
  for (double y : {0.0, 0.25, -0.5}) {
    const std::size_t f = g.nearest(v({y}));
    EXPECT_NEAR(s8[f], 0.5 * y * y, 1e-3);
  }
  EXPECT_TRUE(convexity_check(s8).admissible());
}

TEST(Exhaust, Errors) {
  const GridSpec g = interval(-2, 2, 33);
  NoncompactBodySpec body = NoncompactBodySpec::paraboloid(1, g.h(0));
  EXPECT_EQ(kind_of([&] { exhaust_sequence(body, 0, g); }), ErrorKind::InvalidArgument);
  body.surface_samples = [](double) { return std::vector<SurfaceSample>{}; };
  EXPECT_EQ(kind_of([&] { exhaust_sequence(body, 1, g); }), ErrorKind::EmptyTruncation);
}

TEST(LimitStudy, SingleRowHasNoCauchyColumn) {
  const GridSpec g = interval(-4, 4, 65);
  const NoncompactBodySpec body = NoncompactBodySpec::paraboloid(1, g.h(0), 0.25, 0.5);
  const LimitTable t = limit_study(body, {4}, g, adaptive_cfg(0.02, BoundaryData::frozen()), g.interior_nodes());
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_TRUE(std::isnan(t.rows[0].cauchy_gap));
  EXPECT_EQ(t.final_gap(), 0.0);
  EXPECT_TRUE(t.monotone());
  EXPECT_TRUE(t.cauchy_decreasing());
}

TEST(LimitStudy, DegenerateBodyRejected) {
  const GridSpec g = interval(-4, 4, 65);
  NoncompactBodySpec body = NoncompactBodySpec::paraboloid(1, g.h(0));
  body.eps = 0.0;
  EXPECT_EQ(kind_of([&] { limit_study(body, {2}, g, adaptive_cfg(0.02, BoundaryData::frozen()), {}); }),
            ErrorKind::InvalidArgument);
}

TEST(LimitStudy, CauchyGapsShrinkOnInteriorCompact) {
  const GridSpec g = interval(-4, 4, 129);
  const NoncompactBodySpec body = NoncompactBodySpec::paraboloid(1, g.h(0), 0.25, 0.5);
  std::vector<std::size_t> K;
  for (std::size_t f : g.nodes_with_margin(1))
    if (std::abs(g.coord(f)(0)) <= 1.0) K.push_back(f);
  const LimitTable t = limit_study(body, {2, 4, 8, 16}, g, adaptive_cfg(0.1, BoundaryData::frozen()), K);
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_TRUE(t.monotone());
  EXPECT_TRUE(t.cauchy_decreasing());
}

TEST(CalabiSimplex, MaskedRunTracksOracle) {
  const int m = 33;
  const GridSpec g = calabi_simplex_grid(2, m);
  const SolitonOracle o = calabi_simplex_oracle(2, calabi_default_beta(2));
  // simplex vertices sit on nodes; faces carry zero data
  EXPECT_NEAR(cone_face_distance(o, v({-1.0, 0.0})), 0.0, 1e-12);
  EXPECT_NEAR(cone_face_distance(o, v({0.0, 0.0})), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_LT(cone_face_distance(o, v({1.5, 1.5})), 0.0);
  const auto act = cone_interior_nodes(o, g, 1e-9, 0.2);
  const auto all = cone_interior_nodes(o, g);
  const SupportField s0 = masked_sample(o, g, 0.01, all, 0.0);
  FlowConfig c = adaptive_cfg(0.005, BoundaryData::from_oracle(o, 0.0), 1000);
  c.active = act;
  c.domain = cone_closure_mask(o, g);
  const Trajectory tr = evolve(s0, c);
  ASSERT_FALSE(tr.aborted);
  const double t = tr.final().time;
  EXPECT_NEAR(t, 0.015, 1e-14);
  double err = 0.0, scale = 0.0;
  for (std::size_t f : act) {
    const double ex = o.chart_value(g.coord(f), t).value();
    err = std::max(err, std::abs(tr.final()[f] - ex));
    scale = std::max(scale, std::abs(ex));
  }
  EXPECT_LT(err / scale, 0.02);
  for (std::size_t f = 0; f < g.size(); ++f)
    if (c.domain[f] && std::abs(cone_face_distance(o, g.coord(f))) < 1e-12) {
      // zero up to the cube root of round-off in the face product
      EXPECT_EQ(tr.final()[f], o.chart_value(g.coord(f), t).value());
      EXPECT_LT(std::abs(tr.final()[f]), 1e-5);
    }
}
