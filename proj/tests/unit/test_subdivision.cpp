#include <doctest.h>

#include <cmath>
#include <random>

#include "pointsup/mask.hpp"
#include "pointsup/subdivision.hpp"

using namespace pointsup;

namespace {

// Sharp logistic disk, a stand-in for a trained head.
PointFunction disk(double cx, double cy, double rad, double sharp) {
  return [=](std::span<const Vec2> uv, std::span<double> out) {
    for (std::size_t i = 0; i < uv.size(); ++i) {
      const double d = std::hypot(uv[i].x - cx, uv[i].y - cy) - rad;
      out[i] = 1.0 / (1.0 + std::exp(sharp * d));
    }
  };
}

}  // namespace

TEST_CASE("default render evaluates 784 + 3 * 784 points") {
  std::size_t calls = 0;
  PointFunction f = [&](std::span<const Vec2> uv, std::span<double> out) {
    calls += uv.size();
    disk(0.5, 0.5, 0.3, 40)(uv, out);
  };
  const RenderConfig cfg;
  CHECK(cfg.steps() == 3);
  const auto r = render(f, cfg);
  CHECK(r.eval_count == 3136);
  CHECK(calls == 3136);
  CHECK(r.grid.width == 224);
  CHECK(r.grid.height == 224);
}

TEST_CASE("eval count is start^2 plus min(k, cells) per step") {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 20; ++t) {
    RenderConfig cfg;
    cfg.start_res = 1 << (gen() % 4);
    cfg.target_res = cfg.start_res << (gen() % 4);
    cfg.n_select = 1 + gen() % 500;
    const auto r = render(disk(0.4, 0.6, 0.25, 30), cfg);
    std::size_t expect = std::size_t(cfg.start_res) * cfg.start_res;
    for (int res = cfg.start_res * 2; res <= cfg.target_res; res *= 2) {
      expect += std::min<std::size_t>(cfg.n_select, std::size_t(res) * res);
    }
    CHECK(r.eval_count == expect);
  }
}

TEST_CASE("selecting every cell reproduces the dense render exactly") {
  RenderConfig cfg;
  cfg.n_select = std::size_t(1) << 30;
  const auto f = disk(0.45, 0.55, 0.3, 25);
  const auto r = render(f, cfg);
  const auto d = render_dense(f, 224);
  CHECK(r.grid.values == d.grid.values);
  CHECK(d.eval_count == 224u * 224u);
}

TEST_CASE("adaptive render of a sharp disk matches the dense mask") {
  const auto f = disk(0.5, 0.5, 0.33, 60);
  const auto r = render(f, RenderConfig{});
  const auto d = render_dense(f, 224);
  CHECK(mask_iou(threshold(r.grid), threshold(d.grid)) >= 0.99);
}

TEST_CASE("logit space renders the same mask as probability space") {
  const auto pf = disk(0.5, 0.4, 0.3, 50);
  PointFunction lf = [&](std::span<const Vec2> uv, std::span<double> out) {
    pf(uv, out);
    for (auto& v : out) v = std::log(v / (1 - v));
  };
  RenderConfig cfg;
  cfg.space = RenderSpace::logit;
  const auto rl = render(lf, cfg);
  const auto rp = render(pf, RenderConfig{});
  CHECK(mask_iou(threshold(rl.grid, RenderSpace::logit), threshold(rp.grid)) >= 0.99);
}

TEST_CASE("upsample_x2") {
  GridPrediction g(2, 2, std::vector<double>{0, 1, 2, 3});
  const auto u = upsample_x2(g);
  CHECK(u.width == 4);
  CHECK(u.at(0, 0) == 0.0);
  CHECK(u.at(3, 3) == 3.0);
  CHECK(u.at(1, 0) == doctest::Approx(0.25));
  CHECK(u.at(1, 1) == doctest::Approx(0.25 + 0.5));
  GridPrediction c(3, 3, 7.0);
  for (const double v : upsample_x2(c).values) CHECK(v == 7.0);

  // Each fine cell is the bilinear sample at its center.
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n;
  GridPrediction r(5, 4);
  for (auto& v : r.values) v = n(gen);
  const auto ur = upsample_x2(r);
  std::vector<Vec2> uv;
  for (int row = 0; row < ur.height; ++row)
    for (int col = 0; col < ur.width; ++col) uv.push_back({(col + 0.5) / ur.width, (row + 0.5) / ur.height});
  const auto s = bilinear_sample(r, uv);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(ur.values[i] == doctest::Approx(s[i]).epsilon(1e-12));
}

TEST_CASE("most_uncertain: order and ties") {
  const std::vector<double> s{-0.4, -0.1, -0.1, -0.3, 0.0, -0.1};
  CHECK(most_uncertain(s, 1) == std::vector<std::size_t>{4});
  CHECK(most_uncertain(s, 3) == std::vector<std::size_t>{4, 1, 2});
  CHECK(most_uncertain(s, 4) == std::vector<std::size_t>{4, 1, 2, 5});
  CHECK(most_uncertain(s, 100).size() == 6);
  const std::vector<double> flat(10, -0.2);
  CHECK(most_uncertain(flat, 3) == std::vector<std::size_t>{0, 1, 2});
  CHECK(uncertainty(0.5) == 0.0);
  CHECK(uncertainty(0.9) == doctest::Approx(-0.4));
}

TEST_CASE("config validation") {
  RenderConfig cfg;
  cfg.target_res = 200;
  CHECK_THROWS(cfg.steps());
  cfg.target_res = 14;
  CHECK_THROWS(cfg.steps());
  cfg = RenderConfig{};
  cfg.n_select = 0;
  CHECK_THROWS(cfg.steps());
  cfg = RenderConfig{};
  cfg.target_res = 28;
  CHECK(cfg.steps() == 0);
  CHECK(render(disk(0.5, 0.5, 0.3, 10), cfg).eval_count == 784);
}

TEST_CASE("cell_centers and threshold") {
  const auto c = cell_centers(2);
  CHECK(c == std::vector<Vec2>{{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}});
  GridPrediction p(2, 1, std::vector<double>{0.5, 0.51});
  CHECK(threshold(p).bits() == std::vector<std::uint8_t>{0, 1});
  GridPrediction z(2, 1, std::vector<double>{-0.1, 0.0});
  CHECK(threshold(z, RenderSpace::logit).bits() == std::vector<std::uint8_t>{0, 0});
}
