#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pointsup {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Axis-aligned box in continuous image coordinates. Pixel (col, row)
/// covers [col, col+1) x [row, row+1) and has its center at
/// (col + 0.5, row + 0.5).
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool valid() const noexcept;
  Vec2 center() const noexcept { return {x + 0.5 * w, y + 0.5 * h}; }
  double diagonal() const noexcept;

  /// Closed containment, boundary included.
  bool contains(Vec2 p) const noexcept;

  /// Image point at box-normalized coordinates (u, v) in [0, 1]^2.
  Vec2 at_normalized(double u, double v) const noexcept { return {x + u * w, y + v * h}; }

  /// Intersection with [0, width) x [0, height); may be empty (w or h 0).
  BoundingBox clamped(double width, double height) const noexcept;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Row-major binary mask.
class Bitmask {
 public:
  Bitmask() = default;
  Bitmask(int width, int height);
  Bitmask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool at(int col, int row) const { return bits_[index(col, row)] != 0; }
  void set(int col, int row, bool value) { bits_[index(col, row)] = value ? 1 : 0; }
  bool in_bounds(int col, int row) const noexcept {
    return col >= 0 && row >= 0 && col < width_ && row < height_;
  }

  /// Value of the pixel containing a continuous point; false outside.
  bool at_point(Vec2 p) const noexcept;

  std::size_t count() const noexcept;
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  friend bool operator==(const Bitmask&, const Bitmask&) = default;

 private:
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace pointsup
