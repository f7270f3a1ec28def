#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "afflow/error.hpp"
#include "afflow/linalg.hpp"

namespace afflow {

/// Uniform tensor grid on an axis-aligned box in chart coordinates y.
/// Node storage is row-major: axis 0 varies slowest.
class GridSpec {
 public:
  GridSpec() = default;

  GridSpec(int n, std::array<double, kMaxDim> lo, std::array<double, kMaxDim> hi, int m)
      : n_(n), m_(m), lo_(lo), hi_(hi) {
    if (n < 1 || n > kMaxDim) throw Error(ErrorKind::InvalidArgument, "grid dimension must be 1, 2 or 3");
    if (m < 9) throw Error(ErrorKind::InvalidArgument, "grid needs at least 9 points per axis");
    for (int k = 0; k < n; ++k) {
      if (!(hi[k] > lo[k])) throw Error(ErrorKind::InvalidArgument, "grid box must have hi > lo on every axis");
      h_[k] = (hi[k] - lo[k]) / (m - 1);
    }
    stride_[n - 1] = 1;
    for (int k = n - 2; k >= 0; --k) stride_[k] = stride_[k + 1] * static_cast<std::size_t>(m);
    size_ = stride_[0] * static_cast<std::size_t>(m);
  }

  /// Same box [lo, hi] on every axis.
  static GridSpec cube(int n, double lo, double hi, int m) {
    std::array<double, kMaxDim> l{}, u{};
    for (int k = 0; k < n; ++k) {
      l[k] = lo;
      u[k] = hi;
    }
    return GridSpec(n, l, u, m);
  }

  int n() const { return n_; }
  int m() const { return m_; }
  double lo(int k) const { return lo_[k]; }
  double hi(int k) const { return hi_[k]; }
  double h(int k) const { return h_[k]; }
  double h_max() const {
    double r = 0.0;
    for (int k = 0; k < n_; ++k) r = std::max(r, h_[k]);
    return r;
  }
  std::size_t size() const { return size_; }
  std::size_t stride(int k) const { return stride_[k]; }

  std::array<int, kMaxDim> multi(std::size_t flat) const {
    std::array<int, kMaxDim> idx{};
    for (int k = 0; k < n_; ++k) {
      idx[k] = static_cast<int>(flat / stride_[k]);
      flat %= stride_[k];
    }
    return idx;
  }

  std::size_t flat(const std::array<int, kMaxDim>& idx) const {
    std::size_t f = 0;
    for (int k = 0; k < n_; ++k) f += static_cast<std::size_t>(idx[k]) * stride_[k];
    return f;
  }

  VecN coord(std::size_t flat_index) const {
    const auto idx = multi(flat_index);
    VecN y(n_);
    for (int k = 0; k < n_; ++k) y(k) = lo_[k] + idx[k] * h_[k];
    return y;
  }

  /// Number of cells between the node and the nearest box face.
  int margin(std::size_t flat_index) const {
    const auto idx = multi(flat_index);
    int r = m_;
    for (int k = 0; k < n_; ++k) r = std::min({r, idx[k], m_ - 1 - idx[k]});
    return r;
  }

  /// Interior region: at least two cells from every face.
  bool is_interior(std::size_t flat_index) const { return margin(flat_index) >= 2; }

  std::vector<std::size_t> nodes_with_margin(int min_margin) const {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < size_; ++f)
      if (margin(f) >= min_margin) out.push_back(f);
    return out;
  }

  std::vector<std::size_t> interior_nodes() const { return nodes_with_margin(2); }

  bool contains(const VecN& y, double slack = 1e-12) const {
    for (int k = 0; k < n_; ++k) {
      const double tol = slack * (hi_[k] - lo_[k]);
      if (y(k) < lo_[k] - tol || y(k) > hi_[k] + tol) return false;
    }
    return true;
  }

  /// Nearest node to y (clamped to the box).
  std::size_t nearest(const VecN& y) const {
    std::array<int, kMaxDim> idx{};
    for (int k = 0; k < n_; ++k) {
      const long i = std::lround((y(k) - lo_[k]) / h_[k]);
      idx[k] = static_cast<int>(std::clamp<long>(i, 0, m_ - 1));
    }
    return flat(idx);
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    if (a.n_ != b.n_ || a.m_ != b.m_) return false;
    for (int k = 0; k < a.n_; ++k)
      if (a.lo_[k] != b.lo_[k] || a.hi_[k] != b.hi_[k]) return false;
    return true;
  }

 private:
  int n_ = 0;
  int m_ = 0;
  std::array<double, kMaxDim> lo_{};
  std::array<double, kMaxDim> hi_{};
  std::array<double, kMaxDim> h_{};
  std::array<std::size_t, kMaxDim> stride_{};
  std::size_t size_ = 0;
};

}  // namespace afflow
