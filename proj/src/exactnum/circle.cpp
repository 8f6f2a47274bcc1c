#include "ietlab/circle.hpp"

namespace ietlab {

CirclePoint::CirclePoint(const ExactReal& x) : value_(x.frac()) {}

// Both operands lie in [0,1), so one conditional correction suffices.
CirclePoint circle_add(const CirclePoint& x, const CirclePoint& y) {
  ExactReal s = x.value() + y.value();
  if (s >= ExactReal(1)) s -= ExactReal(1);
  return CirclePoint::reduced(std::move(s));
}

CirclePoint circle_sub(const CirclePoint& x, const CirclePoint& y) {
  ExactReal s = x.value() - y.value();
  if (s.sign() < 0) s += ExactReal(1);
  return CirclePoint::reduced(std::move(s));
}

}  // namespace ietlab
