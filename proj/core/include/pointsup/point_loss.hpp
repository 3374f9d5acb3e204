#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pointsup/annotation_sim.hpp"
#include "pointsup/geometry.hpp"

namespace pointsup {

enum class GridDomain : std::uint8_t { box_normalized, image_absolute };

/// Scalar field on pixel centers, usually logits.
struct GridPrediction {
  int width = 0;
  int height = 0;
  std::vector<double> values;  ///< row-major
  GridDomain domain = GridDomain::box_normalized;

  GridPrediction() = default;
  GridPrediction(int w, int h, double fill = 0.0,
                 GridDomain d = GridDomain::box_normalized);
  GridPrediction(int w, int h, std::vector<double> v,
                 GridDomain d = GridDomain::box_normalized);

  double at(int col, int row) const {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
  double& at(int col, int row) {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
};

/// The four grid cells blended by one bilinear query and their weights.
struct BilinearTaps {
  std::array<std::size_t, 4> index{};
  std::array<double, 4> weight{};
};

/// Taps for a query in pixel-index space, where (c, r) is the center of
/// pixel (c, r). The query is clamped to [0, W-1] x [0, H-1]; offsets within
/// 1e-9 of a pixel center snap onto it so centers are reproduced exactly.
BilinearTaps bilinear_taps_pixel(int width, int height, double px, double py);

/// Taps for a normalized query: (u, v) maps to (u*W - 0.5, v*H - 0.5).
BilinearTaps bilinear_taps(int width, int height, Vec2 uv);

std::vector<double> bilinear_sample(const GridPrediction& grid, std::span<const Vec2> coords);

/// Gradient of sum_i upstream[i] * sample(grid, coords[i]) with respect to
/// the grid values.
std::vector<double> bilinear_backward(int width, int height, std::span<const Vec2> coords,
                                      std::span<const double> upstream);

struct BceResult {
  double loss = 0.0;
  std::vector<double> grad;  ///< d loss / d logits
  /// Sum of weights was zero: loss and gradient are zero.
  bool unsupervised = false;
};

/// Weighted mean of max(z,0) - z*y + log(1 + exp(-|z|)); the gradient is
/// (sigmoid(z) - y) * w / sum(w).
BceResult point_bce(std::span<const double> logits, std::span<const std::uint8_t> labels,
                    std::span<const double> weights);

/// Points in a box-normalized frame with per-point supervision weights.
struct PointBatch {
  std::vector<Vec2> coords;
  std::vector<std::uint8_t> labels;
  std::vector<double> weights;

  std::size_t size() const noexcept { return coords.size(); }
};

/// Re-express image points in the predicted box's normalized frame and give
/// weight 0 to points outside it. A degenerate box zeroes every weight.
PointBatch filter_points_to_box(std::span<const LabeledPoint> points, const BoundingBox& predicted);

/// Zero the weight of coordinates outside [0, 1]^2. Idempotent.
PointBatch mask_outside_unit_box(PointBatch batch);

/// Image point at the center of grid cell (col, row) of a grid laid over box.
Vec2 grid_cell_center(const BoundingBox& box, int col, int row, int grid_w, int grid_h);

/// Mask value at the image pixel containing each cell center (row-major);
/// cells whose center falls outside the image are background.
std::vector<std::uint8_t> grid_labels_from_mask(const Bitmask& mask, const BoundingBox& box,
                                                int grid_w, int grid_h);

/// ceil(N/2) points drawn without replacement, in input order. The draw is
/// a pure function of (seed, iteration).
PointBatch augment_subsample(const PointBatch& batch, std::uint64_t seed, std::uint64_t iteration);
/// Indices selected by augment_subsample.
std::vector<std::size_t> augment_indices(std::size_t n, std::uint64_t seed, std::uint64_t iteration);

}  // namespace pointsup
