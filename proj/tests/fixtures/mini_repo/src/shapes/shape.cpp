#include "../../include/shapes/shape.hpp"

namespace shapes {

double Circle::area() const {
  return 3.141592653589793 * r_ * r_;
}

double Rect::area() const {
  return w_ * h_;
}

}  // namespace shapes
