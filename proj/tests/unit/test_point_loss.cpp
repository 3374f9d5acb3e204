#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "pointsup/point_loss.hpp"

using namespace pointsup;

namespace {

// Textbook bilinear blend at a normalized query, written out longhand.
double bilinear_oracle(const GridPrediction& g, double u, double v) {
  double px = std::clamp(u * g.width - 0.5, 0.0, double(g.width - 1));
  double py = std::clamp(v * g.height - 0.5, 0.0, double(g.height - 1));
  const int x0 = int(std::floor(px)), y0 = int(std::floor(py));
  const int x1 = std::min(x0 + 1, g.width - 1), y1 = std::min(y0 + 1, g.height - 1);
  const double fx = px - x0, fy = py - y0;
  return (1 - fx) * (1 - fy) * g.at(x0, y0) + fx * (1 - fy) * g.at(x1, y0) + (1 - fx) * fy * g.at(x0, y1) +
         fx * fy * g.at(x1, y1);
}

GridPrediction random_grid(int w, int h, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  GridPrediction g(w, h);
  for (auto& v : g.values) v = n(gen);
  return g;
}

}  // namespace

TEST_CASE("bilinear: constant grid, 2x2 center, ramp") {
  GridPrediction c(5, 3, 2.5);
  for (const Vec2 q : {Vec2{0, 0}, Vec2{0.3, 0.9}, Vec2{1, 1}, Vec2{-3, 7}}) {
    CHECK(bilinear_sample(c, std::vector<Vec2>{q})[0] == 2.5);
  }
  GridPrediction g(2, 2, std::vector<double>{1, 2, 3, 4});
  CHECK(bilinear_sample(g, std::vector<Vec2>{{0.5, 0.5}})[0] == doctest::Approx(2.5));

  GridPrediction ramp(3, 3);
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) ramp.at(col, r) = col;
  CHECK(bilinear_sample(ramp, std::vector<Vec2>{{0.5, 0.5}})[0] == 1.0);
  CHECK(bilinear_sample(ramp, std::vector<Vec2>{{5.0 / 6.0, 0.5}})[0] == 2.0);
  CHECK(bilinear_sample(ramp, std::vector<Vec2>{{0.99, 0.5}})[0] == 2.0);
}

TEST_CASE("bilinear: exact at centers, matches the longhand oracle, bounded") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 1 + int(gen() % 7), h = 1 + int(gen() % 7);
    const auto g = random_grid(w, h, gen);
    const double lo = *std::min_element(g.values.begin(), g.values.end());
    const double hi = *std::max_element(g.values.begin(), g.values.end());
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        REQUIRE(bilinear_sample(g, std::vector<Vec2>{{(c + 0.5) / w, (r + 0.5) / h}})[0] == g.at(c, r));
      }
    }
    for (int k = 0; k < 20; ++k) {
      const Vec2 q{u(gen), u(gen)};
      const double v = bilinear_sample(g, std::vector<Vec2>{q})[0];
      CHECK(v == doctest::Approx(bilinear_oracle(g, q.x, q.y)).epsilon(1e-12));
      CHECK(v >= lo - 1e-12);
      CHECK(v <= hi + 1e-12);
    }
  }
}

TEST_CASE("bilinear is linear along an axis between neighbors") {
  std::mt19937_64 gen(4);
  const auto g = random_grid(4, 4, gen);
  const double a = bilinear_sample(g, std::vector<Vec2>{{1.5 / 4, 2.5 / 4}})[0];
  const double b = bilinear_sample(g, std::vector<Vec2>{{2.5 / 4, 2.5 / 4}})[0];
  for (const double t : {0.1, 0.25, 0.6, 0.9}) {
    const double v = bilinear_sample(g, std::vector<Vec2>{{(1.5 + t) / 4, 2.5 / 4}})[0];
    CHECK(v == doctest::Approx((1 - t) * a + t * b).epsilon(1e-12));
  }
}

TEST_CASE("bilinear_backward: center and midpoint") {
  auto g = bilinear_backward(3, 3, std::vector<Vec2>{{0.5, 0.5}}, std::vector<double>{1.0});
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == (i == 4 ? 1.0 : 0.0));
  g = bilinear_backward(4, 1, std::vector<Vec2>{{2.0 / 4, 0.5}}, std::vector<double>{1.0});
  CHECK(g[1] == doctest::Approx(0.5));
  CHECK(g[2] == doctest::Approx(0.5));
  CHECK(g[0] == 0.0);
  CHECK(g[3] == 0.0);
}

TEST_CASE("bilinear_backward matches finite differences") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 2 + int(gen() % 5), h = 2 + int(gen() % 5);
    const auto g = random_grid(w, h, gen);
    std::vector<Vec2> pts(6);
    std::vector<double> up(6);
    for (auto& p : pts) p = {u(gen), u(gen)};
    for (auto& x : up) x = n(gen);
    const auto grad = bilinear_backward(w, h, pts, up);
    auto f = [&](const std::vector<double>& vals) {
      GridPrediction gg(w, h, vals);
      const auto s = bilinear_sample(gg, pts);
      double acc = 0;
      for (std::size_t i = 0; i < s.size(); ++i) acc += up[i] * s[i];
      return acc;
    };
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      REQUIRE(oracle::rel_err(grad[i], oracle::central_difference(f, g.values, i)) < 1e-6);
    }
  }
}

TEST_CASE("point_bce: analytic values and stability") {
  const std::vector<std::uint8_t> one{1};
  const std::vector<double> w1{1.0};
  auto r = point_bce(std::vector<double>{0.0}, one, w1);
  CHECK(r.loss == doctest::Approx(std::log(2.0)));
  CHECK(r.grad[0] == doctest::Approx(-0.5));
  r = point_bce(std::vector<double>{50.0}, one, w1);
  CHECK(std::isfinite(r.loss));
  CHECK(r.loss < 1e-20);
  r = point_bce(std::vector<double>{-800.0}, one, w1);
  CHECK(r.loss == doctest::Approx(800.0));
  CHECK(r.grad[0] == doctest::Approx(-1.0));
  r = point_bce(std::vector<double>{800.0}, std::vector<std::uint8_t>{0}, w1);
  CHECK(r.loss == doctest::Approx(800.0));
}

TEST_CASE("point_bce: zero total weight is flagged") {
  const auto r = point_bce(std::vector<double>{1.0, -2.0}, std::vector<std::uint8_t>{1, 0},
                           std::vector<double>{0.0, 0.0});
  CHECK(r.unsupervised);
  CHECK(r.loss == 0.0);
  CHECK(r.grad == std::vector<double>{0.0, 0.0});
  CHECK_THROWS(point_bce(std::vector<double>{1.0}, std::vector<std::uint8_t>{1, 0}, std::vector<double>{1.0}));
}

TEST_CASE("point_bce gradient matches finite differences") {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> n(0.0, 3.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + gen() % 12;
    std::vector<double> z(k), w(k);
    std::vector<std::uint8_t> y(k);
    for (std::size_t i = 0; i < k; ++i) {
      z[i] = n(gen);
      y[i] = gen() % 2;
      w[i] = u(gen) < 0.2 ? 0.0 : u(gen);
    }
    w[0] = 1.0;
    const auto r = point_bce(z, y, w);
    auto f = [&](const std::vector<double>& zz) { return point_bce(zz, y, w).loss; };
    for (std::size_t i = 0; i < k; ++i) REQUIRE(oracle::rel_err(r.grad[i], oracle::central_difference(f, z, i)) < 1e-6);
  }
}

TEST_CASE("filter_points_to_box") {
  const std::vector<LabeledPoint> pts{{1.0, 1.0, PointLabel::object},
                                      {3.0, 3.0, PointLabel::background},
                                      {7.5, 2.0, PointLabel::object},
                                      {4.0, 4.0, PointLabel::object}};
  const BoundingBox gt{0, 0, 8, 8};
  auto b = filter_points_to_box(pts, gt);
  CHECK(b.weights == std::vector<double>{1, 1, 1, 1});
  CHECK(b.coords[2].x == doctest::Approx(7.5 / 8));
  CHECK(b.labels == std::vector<std::uint8_t>{1, 0, 1, 1});

  const BoundingBox half{0, 0, 4, 4};
  b = filter_points_to_box(pts, half);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK((b.weights[i] == 1.0) == half.contains({pts[i].x, pts[i].y}));
  CHECK(b.weights == std::vector<double>{1, 1, 0, 1});

  b = filter_points_to_box(pts, BoundingBox{20, 20, 2, 2});
  CHECK(b.weights == std::vector<double>{0, 0, 0, 0});
  const auto loss = point_bce(std::vector<double>(4, 0.3), b.labels, b.weights);
  CHECK(loss.loss == 0.0);

  b = filter_points_to_box(pts, BoundingBox{0, 0, 0, 5});
  CHECK(b.weights == std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("filtering is idempotent") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-2.0, 12.0);
  std::vector<LabeledPoint> pts(40);
  for (auto& p : pts) p = {u(gen), u(gen), PointLabel::object};
  const auto once = filter_points_to_box(pts, BoundingBox{1, 2, 6, 5});
  const auto twice = mask_outside_unit_box(once);
  CHECK(twice.weights == once.weights);
  CHECK(mask_outside_unit_box(twice).weights == twice.weights);
}

TEST_CASE("grid_labels_from_mask") {
  Bitmask full(6, 6, std::vector<std::uint8_t>(36, 1));
  CHECK(grid_labels_from_mask(full, BoundingBox{1, 1, 4, 4}, 1, 1) == std::vector<std::uint8_t>{1});

  Bitmask half(56, 56);
  for (int r = 0; r < 56; ++r)
    for (int c = 0; c < 28; ++c) half.set(c, r, true);
  const auto g = grid_labels_from_mask(half, BoundingBox{0, 0, 56, 56}, 28, 28);
  for (int r = 0; r < 28; ++r) {
    for (int c = 0; c < 28; ++c) {
      const auto p = grid_cell_center(BoundingBox{0, 0, 56, 56}, c, r, 28, 28);
      CHECK(g[std::size_t(r) * 28 + c] == (half.at_point(p) ? 1 : 0));
      if (c < 13) CHECK(g[std::size_t(r) * 28 + c] == 1);
      if (c > 14) CHECK(g[std::size_t(r) * 28 + c] == 0);
    }
  }

  std::mt19937_64 gen(6);
  const auto m = oracle::random_mask(10, 8, 0.5, gen);
  const auto crop = grid_labels_from_mask(m, BoundingBox{2, 1, 5, 4}, 5, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 5; ++c) CHECK(crop[std::size_t(r) * 5 + c] == (m.at(c + 2, r + 1) ? 1 : 0));
}

TEST_CASE("augment_subsample: size, membership, determinism") {
  PointBatch b;
  for (int i = 0; i < 10; ++i) {
    b.coords.push_back({i / 10.0, 0.5});
    b.labels.push_back(i % 2);
    b.weights.push_back(1.0);
  }
  const auto s = augment_subsample(b, 3, 0);
  CHECK(s.size() == 5);
  for (const auto& c : s.coords) CHECK(std::find(b.coords.begin(), b.coords.end(), c) != b.coords.end());
  CHECK(augment_subsample(b, 3, 0).coords == s.coords);
  CHECK(augment_indices(1, 3, 4) == std::vector<std::size_t>{0});
  CHECK(augment_indices(7, 3, 4).size() == 4);
  CHECK_THROWS(augment_indices(0, 1, 1));
}

TEST_CASE("augment_subsample: iterations differ, indices uniform") {
  const auto base = augment_indices(10, 9, 0);
  int same = 0;
  std::vector<double> counts(10, 0.0);
  for (std::uint64_t it = 1; it <= 1000; ++it) {
    const auto idx = augment_indices(10, 9, it);
    same += idx == base;
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    REQUIRE(uniq.size() == 5);
    for (const auto i : idx) counts[i] += 1;
  }
  // P(same) = 1/252 per draw; more than 15 in 1000 would be extraordinary.
  CHECK(same < 15);
  CHECK(oracle::chi_square(counts, 500.0) < oracle::chi_square_critical_01(9));
}

TEST_CASE("point supervision on all cell centers equals dense per-cell BCE") {
  std::mt19937_64 gen(12);
  const auto m = oracle::random_mask(20, 20, 0.5, gen);
  const BoundingBox box{3.0, 2.0, 12.5, 14.0};
  const int G = 7;
  const auto grid = random_grid(G, G, gen);
  const auto labels = grid_labels_from_mask(m, box, G, G);

  std::vector<LabeledPoint> pts;
  for (int r = 0; r < G; ++r) {
    for (int c = 0; c < G; ++c) {
      const auto p = grid_cell_center(box, c, r, G, G);
      pts.push_back({p.x, p.y, m.at_point(p) ? PointLabel::object : PointLabel::background});
    }
  }
  const auto batch = filter_points_to_box(pts, box);
  const auto sampled = bilinear_sample(grid, batch.coords);
  const auto point_loss = point_bce(sampled, batch.labels, batch.weights);
  const auto dense = point_bce(grid.values, labels, std::vector<double>(labels.size(), 1.0));
  CHECK(sampled == grid.values);
  CHECK(batch.labels == labels);
  CHECK(point_loss.loss == dense.loss);
  CHECK(point_loss.grad == dense.grad);
}
