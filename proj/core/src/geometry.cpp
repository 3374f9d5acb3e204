#include "pointsup/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pointsup {

bool BoundingBox::valid() const noexcept {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) &&
         w > 0.0 && h > 0.0;
}

double BoundingBox::diagonal() const noexcept { return std::hypot(w, h); }

bool BoundingBox::contains(Vec2 p) const noexcept {
  return p.x >= x && p.x <= x + w && p.y >= y && p.y <= y + h;
}

BoundingBox BoundingBox::clamped(double width, double height) const noexcept {
  const double x0 = std::clamp(x, 0.0, width);
  const double y0 = std::clamp(y, 0.0, height);
  const double x1 = std::clamp(x + w, 0.0, width);
  const double y1 = std::clamp(y + h, 0.0, height);
  return {x0, y0, x1 - x0, y1 - y0};
}

Bitmask::Bitmask(int width, int height)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error("Bitmask: negative dimensions");
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

Bitmask::Bitmask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width < 0 || height < 0) throw Error("Bitmask: negative dimensions");
  if (bits_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error("Bitmask: bit count does not match width*height");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

bool Bitmask::at_point(Vec2 p) const noexcept {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  const double fx = std::floor(p.x);
  const double fy = std::floor(p.y);
  if (fx < 0 || fy < 0 || fx >= width_ || fy >= height_) return false;
  return at(static_cast<int>(fx), static_cast<int>(fy));
}

std::size_t Bitmask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

}  // namespace pointsup
