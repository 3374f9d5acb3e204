#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pointsup/geometry.hpp"
#include "pointsup/point_loss.hpp"

namespace pointsup {

/// Which quantity the point function returns and the grid interpolates.
enum class RenderSpace : std::uint8_t {
  probability,  ///< uncertainty -|p - 0.5|
  logit,        ///< uncertainty -|z|
};

struct RenderConfig {
  int start_res = 28;
  int target_res = 224;
  /// Cells re-evaluated per step, clamped to the cell count.
  std::size_t n_select = 784;
  RenderSpace space = RenderSpace::probability;

  /// Number of x2 steps. Throws unless target/start is a power of two.
  int steps() const;
};

/// Evaluates the point head at box-normalized coordinates, writing one
/// value per coordinate.
using PointFunction = std::function<void(std::span<const Vec2> uv, std::span<double> out)>;

/// Every new cell takes the bilinear sample of the source at its center.
GridPrediction upsample_x2(const GridPrediction& grid);

/// -|prob - 0.5|; larger is more uncertain.
double uncertainty(double prob) noexcept;

/// Indices of the k highest scores, ties by ascending index.
std::vector<std::size_t> most_uncertain(std::span<const double> scores, std::size_t k);

struct RenderResult {
  GridPrediction grid;
  std::size_t eval_count = 0;
};

/// Start from the point function on a start_res^2 grid, then upsample and
/// re-evaluate the n_select most uncertain cells until target_res.
RenderResult render(const PointFunction& point_fn, const RenderConfig& cfg);

/// point_fn at every cell center of a res x res grid.
RenderResult render_dense(const PointFunction& point_fn, int res);

/// Cell centers of a res x res grid in row-major order.
std::vector<Vec2> cell_centers(int res);

/// Threshold a probability (or logit) grid into a mask.
Bitmask threshold(const GridPrediction& grid, RenderSpace space = RenderSpace::probability);

}  // namespace pointsup
