#include "pointsup/subdivision.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pointsup {

int RenderConfig::steps() const {
  if (start_res < 1 || target_res < start_res) throw Error("render: need 1 <= start_res <= target_res");
  if (n_select < 1) throw Error("render: n_select must be >= 1");
  int steps = 0;
  int res = start_res;
  while (res < target_res) {
    res *= 2;
    ++steps;
  }
  if (res != target_res) throw Error("render: target_res / start_res is not a power of 2");
  return steps;
}

GridPrediction upsample_x2(const GridPrediction& grid) {
  GridPrediction out(2 * grid.width, 2 * grid.height, 0.0, grid.domain);
  // Cell centers of the fine grid in the coarse grid's pixel-index space:
  // fine center (2c + 0.5)/2W maps to c - 0.25 / c + 0.25 etc.
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      const double px = (c + 0.5) / 2.0 - 0.5;
      const double py = (r + 0.5) / 2.0 - 0.5;
      const auto t = bilinear_taps_pixel(grid.width, grid.height, px, py);
      double v = 0.0;
      for (int k = 0; k < 4; ++k) {
        if (t.weight[k] != 0.0) v += t.weight[k] * grid.values[t.index[k]];
      }
      out.at(c, r) = v;
    }
  }
  return out;
}

double uncertainty(double prob) noexcept { return -std::abs(prob - 0.5); }

std::vector<std::size_t> most_uncertain(std::span<const double> scores, std::size_t k) {
  k = std::min(k, scores.size());
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
  idx.resize(k);
  return idx;
}

std::vector<Vec2> cell_centers(int res) {
  std::vector<Vec2> uv;
  uv.reserve(static_cast<std::size_t>(res) * res);
  for (int r = 0; r < res; ++r) {
    for (int c = 0; c < res; ++c) uv.push_back({(c + 0.5) / res, (r + 0.5) / res});
  }
  return uv;
}

RenderResult render_dense(const PointFunction& point_fn, int res) {
  if (res < 1) throw Error("render_dense: resolution must be >= 1");
  const auto uv = cell_centers(res);
  RenderResult result{GridPrediction(res, res), uv.size()};
  point_fn(uv, result.grid.values);
  return result;
}

RenderResult render(const PointFunction& point_fn, const RenderConfig& cfg) {
  const int steps = cfg.steps();
  RenderResult result = render_dense(point_fn, cfg.start_res);
  std::vector<double> scores;
  std::vector<Vec2> uv;
  std::vector<double> fresh;
  for (int s = 0; s < steps; ++s) {
    result.grid = upsample_x2(result.grid);
    const int res = result.grid.width;
    scores.resize(result.grid.values.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double v = result.grid.values[i];
      scores[i] = cfg.space == RenderSpace::probability ? uncertainty(v) : -std::abs(v);
    }
    const auto picked = most_uncertain(scores, cfg.n_select);
    uv.clear();
    for (const auto i : picked) {
      const int c = static_cast<int>(i % res);
      const int r = static_cast<int>(i / res);
      uv.push_back({(c + 0.5) / res, (r + 0.5) / res});
    }
    fresh.assign(uv.size(), 0.0);
    point_fn(uv, fresh);
    for (std::size_t j = 0; j < picked.size(); ++j) result.grid.values[picked[j]] = fresh[j];
    result.eval_count += picked.size();
  }
  return result;
}

Bitmask threshold(const GridPrediction& grid, RenderSpace space) {
  const double cut = space == RenderSpace::probability ? 0.5 : 0.0;
  Bitmask mask(grid.width, grid.height);
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) mask.set(c, r, grid.at(c, r) > cut);
  }
  return mask;
}

}  // namespace pointsup
