#include <gtest/gtest.h>

#include <algorithm>
#include <array>

#include "test_util.hpp"

using namespace afflow;
using afflow::test::v;
using afflow::test::va;

namespace {

double max_cnorm2(const SupportField& s) {
  double r = 0.0;
  for (std::size_t f : s.grid.interior_nodes()) r = std::max(r, affine_frame(s, f).Cnorm2);
  return r;
}

// Grid of half-width w centred exactly on y (odd m puts a node on y).
GridSpec centred(const VecN& y, double w, int m) {
  std::array<double, kMaxDim> lo{}, hi{};
  for (int k = 0; k < y.size(); ++k) {
    lo[k] = y(k) - w;
    hi[k] = y(k) + w;
  }
  return GridSpec(static_cast<int>(y.size()), lo, hi, m);
}

}  // namespace

TEST(EuclideanData, SpecExamples) {
  const SupportField s = test::field(2, -1, 1, 33, test::unit_sphere);
  const EuclideanData e = euclidean_data(s, s.grid.nearest(v({0, 0})));
  EXPECT_NEAR((e.nu - va({0, 0, 1})).norm(), 0.0, 1e-15);
  const SupportField q = test::field(2, -1, 1, 33, test::half_square);
  const EuclideanData eq = euclidean_data(q, q.grid.nearest(v({0, 0})));
  EXPECT_NEAR((eq.h - MatN::Identity(2, 2)).norm(), 0.0, 1e-11);
  const SupportField l = test::field(1, -2, 2, 33, test::unit_sphere);
  const EuclideanData e1 = euclidean_data(l, l.grid.nearest(v({1.0})));
  EXPECT_NEAR((e1.nu - va({-1, 1}) / std::sqrt(2.0)).norm(), 0.0, 1e-15);
}

TEST(EuclideanData, UnitNormalAndScaledHessian) {
  const SupportField s = test::field(2, -1, 1, 33, test::generic);
  for (std::size_t f : s.grid.nodes_with_margin(1)) {
    const EuclideanData e = euclidean_data(s, f);
    EXPECT_NEAR(e.nu.norm(), 1.0, 1e-14);
    const double w = std::sqrt(1.0 + s.grid.coord(f).squaredNorm());
    EXPECT_NEAR((e.h - hessian(s, f) / w).norm(), 0.0, 1e-12);
  }
}

TEST(AffineFrame, ParaboloidIsExact) {
  const SupportField q = test::field(2, -1, 1, 33, test::half_square);
  for (std::size_t f : q.grid.interior_nodes()) {
    const AffineFrame fr = affine_frame(q, f);
    EXPECT_NEAR(fr.D, 1.0, 1e-10);
    EXPECT_NEAR(fr.lnD_grad.norm(), 0.0, 1e-8);
    EXPECT_NEAR((fr.xi - va({0, 0, 1})).norm(), 0.0, 1e-8);
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(fr.Gamma[k].cwiseAbs().maxCoeff(), 0.0, 1e-8);
    EXPECT_NEAR(fr.Cnorm2, 0.0, 1e-12);
  }
}

TEST(AffineFrame, UnitSphereAtSouthPole) {
  const SupportField s = test::field(2, -1, 1, 65, test::unit_sphere);
  const AffineFrame fr = affine_frame(s, s.grid.nearest(v({0, 0})));
  const double h2 = s.grid.h_max() * s.grid.h_max();
  EXPECT_NEAR(fr.D, 1.0, 2 * h2);
  EXPECT_NEAR((fr.g - MatN::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.0, 2 * h2);
  EXPECT_NEAR((fr.xi - va({0, 0, 1})).norm(), 0.0, 2 * h2);
  EXPECT_NEAR((fr.xi + fr.F).norm(), 0.0, 2 * h2);
}

TEST(AffineFrame, CubicFormIsTotallySymmetric) {
  const SupportField s = test::field(2, -1, 1, 33, test::generic);
  for (std::size_t f : s.grid.interior_nodes()) {
    const Sym3& C = affine_frame(s, f).C;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          EXPECT_EQ(C(i, j, k), C(j, i, k));
          EXPECT_EQ(C(i, j, k), C(k, j, i));
          EXPECT_EQ(C(i, j, k), C(i, k, j));
        }
  }
}

TEST(AffineFrame, MetricIsPositiveDefiniteAndCnorm2Nonnegative) {
  const SupportField s = test::field(2, -1, 1, 33, test::generic);
  for (std::size_t f : s.grid.interior_nodes()) {
    const AffineFrame fr = affine_frame(s, f);
    EXPECT_GT(min_eig_sym(fr.g), 0.0);
    EXPECT_NEAR((fr.g - std::pow(fr.D, 0.25) * fr.hess).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    EXPECT_GE(fr.Cnorm2, 0.0);
  }
}

TEST(AffineFrame, QuadricsHaveVanishingCubicFormAtSecondOrder) {
  MatA A = MatA::Identity(3, 3);
  A(0, 1) = 0.4;
  A(2, 0) = -0.3;
  const SolitonOracle ell = SolitonOracle::ellipsoid(1.0, AffineMap(A, VecA::Zero(3)));
  for (const auto& sampler : {ChartFn(test::unit_sphere), ell.at_time(0.0)}) {
    std::vector<double> c;
    for (int m : {17, 33, 65}) c.push_back(max_cnorm2(SupportField::sample(GridSpec::cube(2, -1, 1, m), sampler)));
    EXPECT_NEAR(c[0] / c[1], 16.0, 6.0);  // |C|^2 is quadratic in an O(h^2) C
    EXPECT_NEAR(c[1] / c[2], 16.0, 6.0);
    EXPECT_LT(c[2], 1e-5);
  }
  EXPECT_NEAR(max_cnorm2(test::field(2, -1, 1, 33, test::half_square)), 0.0, 1e-14);
  // the control is not a quadric
  EXPECT_GT(max_cnorm2(test::field(2, -1, 1, 33, test::generic)), 1e-2);
}

// the discrete C is built from the same discrete D that defines ln D, so the
// trace cancels identically and only round-off is left
TEST(AffineFrame, ApolarityHoldsToRoundOff) {
  for (int m : {33, 65}) {
    const SupportField s = test::field(2, -1, 1, m, test::generic);
    double w = 0.0;
    for (std::size_t f : s.grid.interior_nodes()) w = std::max(w, apolarity_trace(affine_frame(s, f)).cwiseAbs().maxCoeff());
    EXPECT_LT(w, 1e-12) << "m=" << m;
  }
}

TEST(AffineFrame, TwoRouteAffineNormalAgreement) {
  std::vector<double> worst;
  for (int m : {33, 65}) {
    const SupportField s = test::field(2, -1, 1, m, test::generic);
    double w = 0.0;
    for (std::size_t f : s.grid.interior_nodes()) {
      const AffineFrame fr = affine_frame(s, f);
      w = std::max(w, (fr.xi - fr.xi_two_route).norm());
    }
    worst.push_back(w);
  }
  EXPECT_LT(worst[1], 0.5 * worst[0] + 1e-12);
}

TEST(AffineFrame, UnimodularEquivariance) {
  // s'(Y) = s(A^T Y): the point of s' with normal Y' is A times the point of
  // s with normal A^T Y'; the affine normal maps by A and |C|^2 is invariant.
  MatA A = MatA::Identity(3, 3);
  A(0, 1) = 0.3;
  A(1, 2) = -0.2;
  A(2, 0) = 0.1;
  A /= std::cbrt(A.determinant());
  const AffineMap M(A, VecA::Zero(3));
  ASSERT_TRUE(M.unimodular());
  const ChartFn s = test::generic;
  const ChartFn sp = apply_affine(s, M);
  for (const VecN& yp : {v({0.1, -0.2}), v({-0.3, 0.25}), v({0.0, 0.0})}) {
    const VecA Z = A.transpose() * chart_point(yp);
    const VecN y = Z.head(2) / -Z(2);
    double prev_xi = 0.0;
    for (int m : {33, 65}) {
      const SupportField a = SupportField::sample(centred(y, 0.25, m), s);
      const SupportField b = SupportField::sample(centred(yp, 0.25, m), sp);
      const AffineFrame fa = affine_frame(a, a.grid.nearest(y));
      const AffineFrame fb = affine_frame(b, b.grid.nearest(yp));
      const double xi_err = (fb.xi - A * fa.xi).norm();
      EXPECT_LT(xi_err, 1e-3);
      EXPECT_NEAR(fb.Cnorm2, fa.Cnorm2, 1e-3 * std::max(1.0, fa.Cnorm2));
      EXPECT_NEAR((fb.F - A * fa.F).norm(), 0.0, 1e-3);
      if (prev_xi > 0.0) EXPECT_LT(xi_err, prev_xi);
      prev_xi = xi_err;
    }
  }
}

TEST(ShapeOperator, SpecExamples) {
  const SupportField q = test::field(2, -1, 1, 33, test::half_square);
  const ShapeOperator p = shape_operator(q, q.grid.nearest(v({0.25, -0.25})));
  EXPECT_NEAR(p.A.cwiseAbs().maxCoeff(), 0.0, 1e-8);
  EXPECT_NEAR(p.residual, 0.0, 1e-8);
  // xi = -F on the unit sphere, so xi_i = -F_i and A = identity (a = -1)
  std::vector<double> err;
  for (int m : {65, 129}) {
    const SupportField s = test::field(2, -1, 1, m, test::unit_sphere);
    const ShapeOperator sp = shape_operator(s, s.grid.nearest(v({0.25, -0.25})));
    err.push_back((sp.A - MatN::Identity(2, 2)).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(err[0], 2.0 * 0.03125 * 0.03125);
  EXPECT_NEAR(err[0] / err[1], 4.0, 0.8);
  // generic field: A is not a multiple of the identity
  const SupportField g = test::field(2, -1, 1, 65, test::generic);
  const ShapeOperator gp = shape_operator(g, g.grid.nearest(v({0.25, -0.25})));
  const MatN dev = gp.A - (gp.A.trace() / 2.0) * MatN::Identity(2, 2);
  EXPECT_GT(dev.cwiseAbs().maxCoeff(), 1e-2);
}
