#pragma once

#include <cstdint>
#include <vector>

#include "pointsup/geometry.hpp"

namespace pointsup {

using Ring = std::vector<Vec2>;

struct RasterResult {
  Bitmask mask;
  /// Set when the rings enclose zero area; the mask is then all background.
  bool degenerate = false;
};

/// Fill the even-odd union of closed rings. A pixel is foreground iff its
/// center lies inside. Throws on an empty ring list, rings with fewer than
/// three vertices, or non-finite coordinates.
RasterResult rasterize_polygon(const std::vector<Ring>& rings, int width, int height);

/// COCO-style flat polygon [x1, y1, x2, y2, ...] to a ring.
Ring ring_from_flat(const std::vector<double>& flat);

/// Uncompressed run-length encoding: column-major runs, first run is
/// background (possibly zero).
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const Rle&, const Rle&) = default;
};

Rle rle_encode(const Bitmask& mask);
/// Throws when the run lengths do not sum to height*width.
Bitmask rle_decode(const Rle& rle);

/// Tight box over foreground pixel extents. Throws on an empty mask.
BoundingBox bbox_from_mask(const Bitmask& mask);

enum class DistanceMethod {
  exact,    ///< exact Euclidean transform
  chamfer,  ///< two-pass 3-4 chamfer approximation
};

/// Per-pixel distance from each pixel center to the nearest pixel center of
/// the opposite label.
struct DistanceField {
  int width = 0;
  int height = 0;
  std::vector<double> values;  ///< row-major
  /// The mask holds one label only. Distances are then measured to the
  /// nearest pixel center just outside the image.
  bool single_label = false;

  double at(int col, int row) const {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
};

DistanceField boundary_distance(const Bitmask& mask,
                                DistanceMethod method = DistanceMethod::exact);

/// |a & b| / |a | b|, 1.0 when both are empty. Throws on size mismatch.
double mask_iou(const Bitmask& a, const Bitmask& b);

}  // namespace pointsup
