#include "pointsup/mask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pointsup {
namespace {

double ring_area(const Ring& ring) {
  double twice = 0.0;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    twice += ring[j].x * ring[i].y - ring[i].x * ring[j].y;
  }
  return 0.5 * twice;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared distance transform (lower envelope of parabolas).
void distance_1d(const std::vector<double>& f, std::vector<double>& d,
                 std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      k = 0;
      continue;
    }
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates everywhere.
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double diff = q - v[j];
    d[q] = diff * diff + f[v[j]];
  }
}

// Exact squared Euclidean distance to the nearest site pixel.
std::vector<double> squared_edt(const std::vector<std::uint8_t>& site, int width, int height) {
  std::vector<double> grid(site.size());
  for (std::size_t i = 0; i < site.size(); ++i) grid[i] = site[i] ? 0.0 : kInf;
  const int n = std::max(width, height);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  f.resize(height);
  d.resize(height);
  for (int c = 0; c < width; ++c) {
    for (int r = 0; r < height; ++r) f[r] = grid[std::size_t(r) * width + c];
    distance_1d(f, d, v, z);
    for (int r = 0; r < height; ++r) grid[std::size_t(r) * width + c] = d[r];
  }
  f.resize(width);
  d.resize(width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) f[c] = grid[std::size_t(r) * width + c];
    distance_1d(f, d, v, z);
    for (int c = 0; c < width; ++c) grid[std::size_t(r) * width + c] = d[c];
  }
  return grid;
}

std::vector<double> chamfer(const std::vector<std::uint8_t>& site, int width, int height) {
  // 3-4 chamfer weights, rescaled to unit pixel spacing at the end.
  std::vector<double> g(site.size());
  for (std::size_t i = 0; i < site.size(); ++i) g[i] = site[i] ? 0.0 : kInf;
  auto at = [&](int c, int r) -> double& { return g[std::size_t(r) * width + c]; };
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double best = at(c, r);
      if (c > 0) best = std::min(best, at(c - 1, r) + 3.0);
      if (r > 0) {
        best = std::min(best, at(c, r - 1) + 3.0);
        if (c > 0) best = std::min(best, at(c - 1, r - 1) + 4.0);
        if (c + 1 < width) best = std::min(best, at(c + 1, r - 1) + 4.0);
      }
      at(c, r) = best;
    }
  }
  for (int r = height - 1; r >= 0; --r) {
    for (int c = width - 1; c >= 0; --c) {
      double best = at(c, r);
      if (c + 1 < width) best = std::min(best, at(c + 1, r) + 3.0);
      if (r + 1 < height) {
        best = std::min(best, at(c, r + 1) + 3.0);
        if (c + 1 < width) best = std::min(best, at(c + 1, r + 1) + 4.0);
        if (c > 0) best = std::min(best, at(c - 1, r + 1) + 4.0);
      }
      at(c, r) = best;
    }
  }
  for (auto& x : g) x /= 3.0;
  return g;
}

}  // namespace

Ring ring_from_flat(const std::vector<double>& flat) {
  if (flat.size() % 2 != 0) throw Error("polygon has an odd number of coordinates");
  Ring ring;
  ring.reserve(flat.size() / 2);
  for (std::size_t i = 0; i + 1 < flat.size(); i += 2) ring.push_back({flat[i], flat[i + 1]});
  return ring;
}

RasterResult rasterize_polygon(const std::vector<Ring>& rings, int width, int height) {
  if (rings.empty()) throw Error("rasterize_polygon: empty ring list");
  double total_area = 0.0;
  for (const auto& ring : rings) {
    if (ring.size() < 3) throw Error("rasterize_polygon: ring with fewer than 3 vertices");
    for (const auto& p : ring) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw Error("rasterize_polygon: non-finite coordinate");
      }
    }
    total_area += std::abs(ring_area(ring));
  }

  RasterResult result{Bitmask(width, height), false};
  if (total_area == 0.0) {
    result.degenerate = true;
    return result;
  }

  std::vector<double> crossings;
  for (int row = 0; row < height; ++row) {
    const double y = row + 0.5;
    crossings.clear();
    for (const auto& ring : rings) {
      for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        const Vec2 a = ring[j];
        const Vec2 b = ring[i];
        if ((a.y > y) != (b.y > y)) {
          crossings.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
        }
      }
    }
    std::sort(crossings.begin(), crossings.end());
    // A center is inside when an odd number of crossings lie to its right.
    std::size_t k = 0;
    for (int col = 0; col < width; ++col) {
      const double x = col + 0.5;
      while (k < crossings.size() && crossings[k] <= x) ++k;
      const std::size_t right = crossings.size() - k;
      if (right % 2 == 1) result.mask.set(col, row, true);
    }
  }
  return result;
}

Rle rle_encode(const Bitmask& mask) {
  Rle rle{mask.height(), mask.width(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int col = 0; col < mask.width(); ++col) {
    for (int row = 0; row < mask.height(); ++row) {
      const std::uint8_t bit = mask.at(col, row) ? 1 : 0;
      if (bit != current) {
        rle.counts.push_back(run);
        run = 0;
        current = bit;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

Bitmask rle_decode(const Rle& rle) {
  if (rle.height < 0 || rle.width < 0) throw Error("rle_decode: negative size");
  const std::uint64_t expected = std::uint64_t(rle.height) * std::uint64_t(rle.width);
  const std::uint64_t total =
      std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  if (total != expected) {
    throw Error("rle_decode: run lengths sum to " + std::to_string(total) + ", expected " +
                std::to_string(expected));
  }
  Bitmask mask(rle.width, rle.height);
  std::uint64_t pos = 0;
  bool value = false;
  for (const auto run : rle.counts) {
    if (value) {
      for (std::uint64_t i = pos; i < pos + run; ++i) {
        mask.set(static_cast<int>(i / rle.height), static_cast<int>(i % rle.height), true);
      }
    }
    pos += run;
    value = !value;
  }
  return mask;
}

BoundingBox bbox_from_mask(const Bitmask& mask) {
  int min_c = mask.width(), min_r = mask.height(), max_c = -1, max_r = -1;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask.at(c, r)) continue;
      min_c = std::min(min_c, c);
      max_c = std::max(max_c, c);
      min_r = std::min(min_r, r);
      max_r = std::max(max_r, r);
    }
  }
  if (max_c < 0) throw Error("bbox_from_mask: empty mask");
  return {double(min_c), double(min_r), double(max_c - min_c + 1), double(max_r - min_r + 1)};
}

DistanceField boundary_distance(const Bitmask& mask, DistanceMethod method) {
  const int w = mask.width();
  const int h = mask.height();
  DistanceField field{w, h, std::vector<double>(mask.size(), 0.0), false};
  const std::size_t fg = mask.count();
  if (fg == 0 || fg == mask.size()) {
    field.single_label = true;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        field.values[std::size_t(r) * w + c] = std::min({c + 1, r + 1, w - c, h - r});
      }
    }
    return field;
  }

  std::vector<std::uint8_t> fg_sites = mask.bits();
  std::vector<std::uint8_t> bg_sites(mask.size());
  for (std::size_t i = 0; i < bg_sites.size(); ++i) bg_sites[i] = fg_sites[i] ? 0 : 1;

  if (method == DistanceMethod::exact) {
    const auto to_fg = squared_edt(fg_sites, w, h);
    const auto to_bg = squared_edt(bg_sites, w, h);
    for (std::size_t i = 0; i < field.values.size(); ++i) {
      field.values[i] = std::sqrt(fg_sites[i] ? to_bg[i] : to_fg[i]);
    }
  } else {
    const auto to_fg = chamfer(fg_sites, w, h);
    const auto to_bg = chamfer(bg_sites, w, h);
    for (std::size_t i = 0; i < field.values.size(); ++i) {
      field.values[i] = fg_sites[i] ? to_bg[i] : to_fg[i];
    }
  }
  return field;
}

double mask_iou(const Bitmask& a, const Bitmask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error("mask_iou: dimension mismatch");
  }
  std::size_t inter = 0, uni = 0;
  const auto& ab = a.bits();
  const auto& bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    inter += (ab[i] & bb[i]);
    uni += (ab[i] | bb[i]);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace pointsup
