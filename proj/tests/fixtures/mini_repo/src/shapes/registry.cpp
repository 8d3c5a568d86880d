#include <memory>
#include <vector>

#include "../../include/shapes/shape.hpp"

namespace shapes {

struct Registry {
  std::vector<std::unique_ptr<Shape>> items;
  double scale = 1.0;
};

double total_area(const Registry& reg) {
  double sum = 0.0;
  for (const auto& s : reg.items) {
    sum += s->area();
  }
  return sum * reg.scale;
}

std::size_t count_named(const Registry& reg, const std::string& wanted) {
  std::size_t n = 0;
  for (const auto& s : reg.items) {
    if (s->name() == wanted) {
      ++n;
    }
  }
  return n;
}

Registry make_default_registry() {
  Registry reg;
  reg.items.push_back(std::make_unique<Circle>(1.0));
  reg.items.push_back(std::make_unique<Rect>(2.0, 3.0));
  return reg;
}

}  // namespace shapes
