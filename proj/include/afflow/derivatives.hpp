#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "afflow/linalg.hpp"
#include "afflow/support_field.hpp"

namespace afflow {

struct Derivatives {
  VecN grad;
  MatN hess;
  Sym3 third;
};

namespace detail {

// Value at flat node shifted by integer offsets along axes.
inline double at(const SupportField& s, std::size_t f, int a, int da, int b = 0, int db = 0, int c = 0, int dc = 0) {
  const auto& g = s.grid;
  long off = static_cast<long>(da) * static_cast<long>(g.stride(a));
  off += static_cast<long>(db) * static_cast<long>(g.stride(b));
  off += static_cast<long>(dc) * static_cast<long>(g.stride(c));
  return s.values[static_cast<std::size_t>(static_cast<long>(f) + off)];
}

// Second-order central stencil for s_ab at the node shifted by dc along c.
inline double second(const SupportField& s, std::size_t f, int a, int b, int c = 0, int dc = 0) {
  const auto& g = s.grid;
  if (a == b) {
    const double h = g.h(a);
    return (at(s, f, a, 1, c, dc) - 2.0 * at(s, f, c, dc) + at(s, f, a, -1, c, dc)) / (h * h);
  }
  return (at(s, f, a, 1, b, 1, c, dc) - at(s, f, a, 1, b, -1, c, dc) - at(s, f, a, -1, b, 1, c, dc) +
          at(s, f, a, -1, b, -1, c, dc)) /
         (4.0 * g.h(a) * g.h(b));
}

inline void require_margin(const SupportField& s, std::size_t f, int margin) {
  if (s.grid.margin(f) < margin) throw Error(ErrorKind::BoundaryNode, "node too close to the grid boundary");
}

}  // namespace detail

inline VecN gradient(const SupportField& s, std::size_t f) {
  detail::require_margin(s, f, 1);
  const int n = s.grid.n();
  VecN g(n);
  for (int i = 0; i < n; ++i) g(i) = (detail::at(s, f, i, 1) - detail::at(s, f, i, -1)) / (2.0 * s.grid.h(i));
  return g;
}

/// Hessian without the margin check, for hot loops over prevalidated nodes.
inline MatN hessian_unchecked(const SupportField& s, std::size_t f) {
  const auto& g = s.grid;
  const int n = g.n();
  const double* v = s.values.data();
  MatN H(n, n);
  for (int i = 0; i < n; ++i) {
    const std::size_t si = g.stride(i);
    const double hi = g.h(i);
    H(i, i) = (v[f + si] - 2.0 * v[f] + v[f - si]) / (hi * hi);
    for (int j = i + 1; j < n; ++j) {
      const std::size_t sj = g.stride(j);
      H(i, j) = H(j, i) = (v[f + si + sj] - v[f + si - sj] - v[f - si + sj] + v[f - si - sj]) / (4.0 * hi * g.h(j));
    }
  }
  return H;
}

/// Hessian on a masked domain (in_domain flags the closed domain). Mixed
/// derivatives use the four-point cross when it fits and otherwise the
/// seven-point variant along whichever diagonal stays inside:
///   s_ij = (h_i^2 s_ii + h_j^2 s_jj -/+ (s(+i-/+j) + s(-i+/-j) - 2 s)) / (2 h_i h_j) (signs per diagonal).
inline MatN hessian_masked(const SupportField& s, std::size_t f, const std::vector<char>& in_domain) {
  const auto& g = s.grid;
  const int n = g.n();
  const double* v = s.values.data();
  auto inside = [&](std::size_t idx) { return in_domain[idx] != 0; };
  MatN H(n, n);
  for (int i = 0; i < n; ++i) {
    const std::size_t si = g.stride(i);
    const double hi = g.h(i);
    if (!inside(f + si) || !inside(f - si)) throw Error(ErrorKind::BoundaryNode, "axis stencil leaves the domain");
    H(i, i) = (v[f + si] - 2.0 * v[f] + v[f - si]) / (hi * hi);
  }
  for (int i = 0; i < n; ++i) {
    const std::size_t si = g.stride(i);
    for (int j = i + 1; j < n; ++j) {
      const std::size_t sj = g.stride(j);
      const double hh = g.h(i) * g.h(j);
      const bool main_diag = inside(f + si + sj) && inside(f - si - sj);
      const bool anti_diag = inside(f + si - sj) && inside(f - si + sj);
      double val;
      if (main_diag && anti_diag) {
        val = (v[f + si + sj] - v[f + si - sj] - v[f - si + sj] + v[f - si - sj]) / (4.0 * hh);
      } else if (anti_diag) {
        const double second_anti = v[f + si - sj] + v[f - si + sj] - 2.0 * v[f];
        val = (g.h(i) * g.h(i) * H(i, i) + g.h(j) * g.h(j) * H(j, j) - second_anti) / (2.0 * hh);
      } else if (main_diag) {
        const double second_main = v[f + si + sj] + v[f - si - sj] - 2.0 * v[f];
        val = (second_main - g.h(i) * g.h(i) * H(i, i) - g.h(j) * g.h(j) * H(j, j)) / (2.0 * hh);
      } else {
        throw Error(ErrorKind::BoundaryNode, "no mixed-derivative stencil fits inside the domain");
      }
      H(i, j) = H(j, i) = val;
    }
  }
  return H;
}

/// Nodes whose full third-derivative stencil (offsets up to 2 on an axis and
/// the cross points around every axis neighbour) lies inside the domain.
inline bool full_stencil_inside(const GridSpec& g, std::size_t f, const std::vector<char>& in_domain) {
  if (g.margin(f) < 2) return false;
  const int n = g.n();
  for (int c = -1; c <= 1; ++c)
    for (int axis = 0; axis < n; ++axis) {
      const long center = static_cast<long>(f) + c * static_cast<long>(g.stride(axis));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int a = -1; a <= 1; ++a)
            for (int b = -1; b <= 1; ++b) {
              const long idx = center + a * static_cast<long>(g.stride(i)) + b * static_cast<long>(g.stride(j));
              if (!in_domain[static_cast<std::size_t>(idx)]) return false;
            }
    }
  return true;
}

/// D^{-1/(n+2)} with cheap special cases.
inline double inverse_root_det(double D, int n) {
  switch (n) {
    case 1: return 1.0 / std::cbrt(D);
    case 2: return 1.0 / std::sqrt(std::sqrt(D));
    default: return std::pow(D, -1.0 / (n + 2.0));
  }
}

/// Central-difference Hessian; needs one cell of margin.
inline MatN hessian(const SupportField& s, std::size_t f) {
  detail::require_margin(s, f, 1);
  const int n = s.grid.n();
  MatN H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) H(i, j) = H(j, i) = detail::second(s, f, i, j);
  return H;
}

/// Gradient, Hessian and the totally symmetric third-derivative tensor.
/// Third derivatives difference the second-derivative stencils along the
/// remaining axis, then average over all index orderings.
inline Derivatives derivatives(const SupportField& s, std::size_t f) {
  detail::require_margin(s, f, 2);
  const int n = s.grid.n();
  Derivatives d{gradient(s, f), hessian(s, f), Sym3{}};
  d.third.n = n;
  double raw[kMaxDim][kMaxDim][kMaxDim];
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        const double v = (detail::second(s, f, a, b, c, 1) - detail::second(s, f, a, b, c, -1)) / (2.0 * s.grid.h(c));
        raw[a][b][c] = raw[b][a][c] = v;
      }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        d.third(i, j, k) =
            (raw[i][j][k] + raw[i][k][j] + raw[j][i][k] + raw[j][k][i] + raw[k][i][j] + raw[k][j][i]) / 6.0;
  return d;
}

}  // namespace afflow
