#pragma once

#include "ietlab/exact_real.hpp"

namespace ietlab {

// A point of the circle [0,1); construction reduces mod 1.
class CirclePoint {
 public:
  CirclePoint() = default;
  explicit CirclePoint(const ExactReal& x);

  static CirclePoint parse(std::string_view text) { return CirclePoint(ExactReal::parse(text)); }
  /// Wraps a value already known to lie in [0,1).
  static CirclePoint reduced(ExactReal x) {
    CirclePoint p;
    p.value_ = std::move(x);
    return p;
  }

  const ExactReal& value() const { return value_; }

  friend bool operator==(const CirclePoint&, const CirclePoint&) = default;
  friend auto operator<=>(const CirclePoint& x, const CirclePoint& y) { return x.value_ <=> y.value_; }

 private:
  ExactReal value_;
};

CirclePoint circle_add(const CirclePoint& x, const CirclePoint& y);
CirclePoint circle_sub(const CirclePoint& x, const CirclePoint& y);

/// Reduces x mod 1 into [0,1) (alias of frac, kept for call-site readability).
inline ExactReal mod1(const ExactReal& x) { return x.frac(); }

}  // namespace ietlab
