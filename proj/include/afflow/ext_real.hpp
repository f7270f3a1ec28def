#pragma once

#include <limits>

#include "afflow/error.hpp"

namespace afflow {

/// Extended real used for support functions that are +inf off their domain.
/// Infinity is a separate state, never a large float.
class ExtReal {
 public:
  constexpr ExtReal(double v) : value_(v), infinite_(false) {}  // NOLINT: implicit by intent
  static constexpr ExtReal infinity() { return ExtReal(); }

  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool is_infinite() const { return infinite_; }

  double value() const {
    if (infinite_) throw Error(ErrorKind::OutsideCone, "value requested from +inf marker");
    return value_;
  }

  friend constexpr bool operator==(const ExtReal& a, const ExtReal& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

 private:
  constexpr ExtReal() : value_(0.0), infinite_(true) {}

  double value_;
  bool infinite_;
};

inline ExtReal min(const ExtReal& a, const ExtReal& b) {
  if (a.is_infinite()) return b;
  if (b.is_infinite()) return a;
  return a.value() < b.value() ? a : b;
}

}  // namespace afflow
