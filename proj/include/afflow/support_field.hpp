#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "afflow/error.hpp"
#include "afflow/grid.hpp"
#include "afflow/linalg.hpp"

namespace afflow {

/// Closed-form support function restricted to the chart {Y = (y, -1)}.
using ChartFn = std::function<double(const VecN& y)>;

/// Discrete support function on a chart grid.
struct SupportField {
  GridSpec grid;
  std::vector<double> values;
  double time = 0.0;
  std::string label;

  SupportField() = default;
  SupportField(GridSpec g, std::vector<double> v, double t = 0.0, std::string lbl = {})
      : grid(std::move(g)), values(std::move(v)), time(t), label(std::move(lbl)) {
    if (values.size() != grid.size())
      throw Error(ErrorKind::InvalidArgument, "value array does not match grid size");
    for (double x : values)
      if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "support field values must be finite");
  }

  static SupportField sample(const GridSpec& g, const ChartFn& fn, double t = 0.0, std::string lbl = {}) {
    std::vector<double> v(g.size());
    for (std::size_t f = 0; f < g.size(); ++f) v[f] = fn(g.coord(f));
    return SupportField(g, std::move(v), t, std::move(lbl));
  }

  double operator[](std::size_t f) const { return values[f]; }

  double max_abs() const {
    double r = 0.0;
    for (double x : values) r = std::max(r, std::abs(x));
    return r;
  }

  /// Multilinear interpolation at a chart point inside the box.
  double interpolate(const VecN& y) const {
    const int n = grid.n();
    if (!grid.contains(y)) throw Error(ErrorKind::OutOfDomain, "chart point outside grid box");
    std::array<int, kMaxDim> base{};
    std::array<double, kMaxDim> frac{};
    for (int k = 0; k < n; ++k) {
      double u = (y(k) - grid.lo(k)) / grid.h(k);
      u = std::clamp(u, 0.0, static_cast<double>(grid.m() - 1));
      int i = static_cast<int>(std::floor(u));
      if (i >= grid.m() - 1) i = grid.m() - 2;
      base[k] = i;
      frac[k] = u - i;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << n); ++corner) {
      double w = 1.0;
      std::array<int, kMaxDim> idx = base;
      for (int k = 0; k < n; ++k) {
        const bool up = (corner >> k) & 1;
        w *= up ? frac[k] : 1.0 - frac[k];
        idx[k] += up ? 1 : 0;
      }
      if (w != 0.0) acc += w * values[grid.flat(idx)];
    }
    return acc;
  }
};

namespace detail {

inline VecN project_to_chart(const VecA& Y, double& scale) {
  const int n = static_cast<int>(Y.size()) - 1;
  const double last = Y(n);
  if (!(last < 0.0)) throw Error(ErrorKind::ChartViolation, "last homogeneous coordinate must be negative");
  scale = -last;
  VecN y(n);
  for (int k = 0; k < n; ++k) y(k) = Y(k) / scale;
  return y;
}

}  // namespace detail

/// Degree-one homogeneous extension: s(Y) = (-Y_{n+1}) s(Y' / -Y_{n+1}).
inline double eval_homogeneous(const SupportField& s, const VecA& Y) {
  if (Y.size() != s.grid.n() + 1) throw Error(ErrorKind::InvalidArgument, "Y must live in R^{n+1}");
  double scale = 0.0;
  const VecN y = detail::project_to_chart(Y, scale);
  return scale * s.interpolate(y);
}

inline double eval_homogeneous(const ChartFn& s, const VecA& Y) {
  double scale = 0.0;
  const VecN y = detail::project_to_chart(Y, scale);
  return scale * s(y);
}

/// (y, -1) in R^{n+1}.
inline VecA chart_point(const VecN& y) {
  VecA Y(y.size() + 1);
  Y.head(y.size()) = y;
  Y(y.size()) = -1.0;
  return Y;
}

}  // namespace afflow
