#include "pointsup/point_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pointsup/random.hpp"

namespace pointsup {
namespace {

constexpr double kSnap = 1e-9;

// Split a clamped coordinate into a base index and fractional offset.
void split_axis(double p, int extent, int& i0, int& i1, double& frac) {
  p = std::clamp(p, 0.0, static_cast<double>(extent - 1));
  const double nearest = std::round(p);
  if (std::abs(p - nearest) < kSnap) p = nearest;
  double base = std::floor(p);
  if (base >= extent - 1) base = extent - 1;
  i0 = static_cast<int>(base);
  i1 = std::min(i0 + 1, extent - 1);
  frac = p - base;
}

}  // namespace

GridPrediction::GridPrediction(int w, int h, double fill, GridDomain d)
    : width(w), height(h), values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill),
      domain(d) {
  if (w < 1 || h < 1) throw Error("GridPrediction: dimensions must be >= 1");
}

GridPrediction::GridPrediction(int w, int h, std::vector<double> v, GridDomain d)
    : width(w), height(h), values(std::move(v)), domain(d) {
  if (w < 1 || h < 1) throw Error("GridPrediction: dimensions must be >= 1");
  if (values.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
    throw Error("GridPrediction: value count does not match dimensions");
  }
}

BilinearTaps bilinear_taps_pixel(int width, int height, double px, double py) {
  int x0, x1, y0, y1;
  double fx, fy;
  split_axis(px, width, x0, x1, fx);
  split_axis(py, height, y0, y1, fy);
  const auto w = static_cast<std::size_t>(width);
  BilinearTaps t;
  t.index = {y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1};
  t.weight = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
  return t;
}

BilinearTaps bilinear_taps(int width, int height, Vec2 uv) {
  return bilinear_taps_pixel(width, height, uv.x * width - 0.5, uv.y * height - 0.5);
}

std::vector<double> bilinear_sample(const GridPrediction& grid, std::span<const Vec2> coords) {
  std::vector<double> out(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto t = bilinear_taps(grid.width, grid.height, coords[i]);
    // Zero-weight taps are skipped so exact center queries return the value
    // itself, even next to non-finite neighbours.
    double v = 0.0;
    for (int k = 0; k < 4; ++k) {
      if (t.weight[k] != 0.0) v += t.weight[k] * grid.values[t.index[k]];
    }
    out[i] = v;
  }
  return out;
}

std::vector<double> bilinear_backward(int width, int height, std::span<const Vec2> coords,
                                      std::span<const double> upstream) {
  if (coords.size() != upstream.size()) throw Error("bilinear_backward: length mismatch");
  std::vector<double> grad(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto t = bilinear_taps(width, height, coords[i]);
    for (int k = 0; k < 4; ++k) grad[t.index[k]] += t.weight[k] * upstream[i];
  }
  return grad;
}

BceResult point_bce(std::span<const double> logits, std::span<const std::uint8_t> labels,
                    std::span<const double> weights) {
  if (logits.size() != labels.size() || logits.size() != weights.size()) {
    throw Error("point_bce: length mismatch");
  }
  BceResult r;
  r.grad.assign(logits.size(), 0.0);
  double total_weight = 0.0;
  for (const double w : weights) total_weight += w;
  if (total_weight <= 0.0) {
    r.unsupervised = true;
    return r;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const double z = logits[i];
    const double y = labels[i] ? 1.0 : 0.0;
    sum += weights[i] * (std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))));
    const double sigma = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    r.grad[i] = (sigma - y) * weights[i] / total_weight;
  }
  r.loss = sum / total_weight;
  return r;
}

PointBatch mask_outside_unit_box(PointBatch batch) {
  for (std::size_t i = 0; i < batch.coords.size(); ++i) {
    const Vec2 c = batch.coords[i];
    const bool inside = c.x >= 0.0 && c.x <= 1.0 && c.y >= 0.0 && c.y <= 1.0;
    if (!inside) batch.weights[i] = 0.0;
  }
  return batch;
}

PointBatch filter_points_to_box(std::span<const LabeledPoint> points, const BoundingBox& predicted) {
  PointBatch batch;
  batch.coords.reserve(points.size());
  batch.labels.reserve(points.size());
  batch.weights.reserve(points.size());
  const bool ok = predicted.valid();
  for (const auto& p : points) {
    batch.labels.push_back(p.label == PointLabel::object ? 1 : 0);
    if (!ok) {
      batch.coords.push_back({0.0, 0.0});
      batch.weights.push_back(0.0);
      continue;
    }
    batch.coords.push_back({(p.x - predicted.x) / predicted.w, (p.y - predicted.y) / predicted.h});
    batch.weights.push_back(predicted.contains({p.x, p.y}) ? 1.0 : 0.0);
  }
  return batch;
}

Vec2 grid_cell_center(const BoundingBox& box, int col, int row, int grid_w, int grid_h) {
  return box.at_normalized((col + 0.5) / grid_w, (row + 0.5) / grid_h);
}

std::vector<std::uint8_t> grid_labels_from_mask(const Bitmask& mask, const BoundingBox& box,
                                                int grid_w, int grid_h) {
  if (grid_w < 1 || grid_h < 1) throw Error("grid_labels_from_mask: empty grid");
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(grid_w) * static_cast<std::size_t>(grid_h));
  for (int r = 0; r < grid_h; ++r) {
    for (int c = 0; c < grid_w; ++c) {
      labels[std::size_t(r) * grid_w + c] =
          mask.at_point(grid_cell_center(box, c, r, grid_w, grid_h)) ? 1 : 0;
    }
  }
  return labels;
}

std::vector<std::size_t> augment_indices(std::size_t n, std::uint64_t seed, std::uint64_t iteration) {
  if (n == 0) throw Error("augment_subsample: empty batch");
  const std::size_t k = (n + 1) / 2;
  Rng rng = Rng::stream(seed ^ kAugmentStreamKey, iteration);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

PointBatch augment_subsample(const PointBatch& batch, std::uint64_t seed, std::uint64_t iteration) {
  const auto idx = augment_indices(batch.size(), seed, iteration);
  PointBatch out;
  for (const auto i : idx) {
    out.coords.push_back(batch.coords[i]);
    out.labels.push_back(batch.labels[i]);
    out.weights.push_back(batch.weights[i]);
  }
  return out;
}

}  // namespace pointsup
