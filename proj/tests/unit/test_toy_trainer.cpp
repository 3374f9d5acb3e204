#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <numeric>

#include "pointsup/mask.hpp"
#include "pointsup/toy_trainer.hpp"

using namespace pointsup;

namespace {

// Pearson correlation of one channel with the mask bits, pooled over all
// pixels of all instances.
double point_biserial(const std::vector<SyntheticInstance>& suite, int ch) {
  std::vector<double> f, b;
  for (const auto& inst : suite) {
    const auto c = inst.features.channel(ch);
    f.insert(f.end(), c.begin(), c.end());
    for (const auto bit : inst.mask.bits()) b.push_back(bit);
  }
  const double n = double(f.size());
  const double mf = std::accumulate(f.begin(), f.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0, vf = 0, vb = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    cov += (f[i] - mf) * (b[i] - mb);
    vf += (f[i] - mf) * (f[i] - mf);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return cov / std::sqrt(vf * vb);
}

TrainConfig quick(int steps = 60) {
  TrainConfig cfg;
  cfg.steps = steps;
  cfg.coords = CoordMode::relative;
  cfg.hidden = {8, 8, 8};
  return cfg;
}

}  // namespace

TEST_CASE("suite: deterministic, areas in range, informative channel 0") {
  const auto a = generate_suite(30, 5);
  const auto b = generate_suite(30, 5);
  REQUIRE(a.size() == 30);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == std::int64_t(i) + 1);
    CHECK(a[i].mask == b[i].mask);
    CHECK(a[i].features.data == b[i].features.data);
    CHECK(a[i].bbox == bbox_from_mask(a[i].mask));
    const double frac = double(a[i].mask.count()) / (a[i].bbox.w * a[i].bbox.h);
    CHECK(frac >= 0.10);
    CHECK(frac <= 0.80);
    CHECK(a[i].features.channels == kSuiteChannels);
  }
  CHECK(point_biserial(a, 0) > 0.3);
  CHECK(std::abs(point_biserial(a, 6)) < 0.05);
  CHECK(generate_suite(3, 6)[0].mask != a[0].mask);
  // Instances do not depend on the suite size.
  CHECK(generate_suite(5, 5)[4].features.data == a[4].features.data);

  SuiteConfig blurred;
  blurred.feature_blur = 3.0;
  CHECK(point_biserial(generate_suite(30, 5, blurred), 0) > 0.3);
}

TEST_CASE("suite dataset mirrors the instances") {
  const auto suite = generate_suite(4, 1);
  const auto ds = suite_dataset(suite, "toy");
  CHECK(ds.id == "toy");
  CHECK(ds.images.size() == 4);
  const auto sim = simulate_dataset(ds, 5, 0);
  CHECK(sim.file.annotations.size() == 4);
  CHECK(sim.skipped.empty());
}

TEST_CASE("training is deterministic and lowers the loss") {
  const auto suite = generate_suite(2, 3);
  const auto sim = simulate_dataset(suite_dataset(suite), 10, 4);
  const auto targets = point_targets(suite[0], *sim.file.find(suite[0].id));
  const auto cfg = quick();
  const auto a = train_instance(suite[0], targets, cfg);
  const auto b = train_instance(suite[0], targets, cfg);
  CHECK(a.params.flat == b.params.flat);
  CHECK(a.loss_curve == b.loss_curve);
  REQUIRE(a.loss_curve.size() == 60);
  CHECK(a.loss_curve.back() <= a.loss_curve.front());
  CHECK(a.loss_curve.front() == doctest::Approx(std::log(2.0)).epsilon(1e-3));

  auto aug = cfg;
  aug.augment = true;
  const auto c = train_instance(suite[0], targets, aug);
  CHECK(c.params.flat != a.params.flat);
  CHECK(c.params.flat == train_instance(suite[0], targets, aug).params.flat);
}

TEST_CASE("no supervised points leaves the initialization untouched") {
  const auto suite = generate_suite(1, 2);
  const auto cfg = quick();
  const auto init = init_head_params(make_arch(cfg, kSuiteChannels, make_encoder(cfg)), cfg.init_seed);
  const auto empty = train_instance(suite[0], TrainTargets{}, cfg);
  CHECK(empty.params.flat == init.flat);
  CHECK(empty.loss_curve.empty());

  PointAnnotation outside{suite[0].id, {{0.0, 0.0, PointLabel::background}, {63.9, 63.9, PointLabel::background}}};
  const auto t = point_targets(suite[0], outside);
  CHECK(std::accumulate(t.weights.begin(), t.weights.end(), 0.0) == 0.0);
  CHECK(train_instance(suite[0], t, cfg).params.flat == init.flat);
}

TEST_CASE("points at every grid cell center train exactly like grid supervision") {
  const auto suite = generate_suite(5, 8);
  for (const auto& inst : suite) {
    const int G = 14;
    PointAnnotation ann{inst.id, {}};
    for (int r = 0; r < G; ++r) {
      for (int c = 0; c < G; ++c) {
        const auto p = grid_cell_center(inst.bbox, c, r, G, G);
        ann.points.push_back({p.x, p.y, inst.mask.at_point(p) ? PointLabel::object : PointLabel::background});
      }
    }
    auto cfg = quick(25);
    const auto via_points = train_instance(inst, point_targets(inst, ann), cfg);
    cfg.supervision = SupervisionMode::full_grid;
    cfg.grid = G;
    const auto via_grid = train_instance(inst, grid_targets(inst, G), cfg);
    CHECK(via_points.params.flat == via_grid.params.flat);
    CHECK(via_points.loss_curve == via_grid.loss_curve);
  }
}

TEST_CASE("full-grid training fits an ellipse") {
  // Suite features around a hand-built ellipse: channel 0 is the clipped
  // signed distance plus noise, the rest pure noise.
  SyntheticInstance inst;
  inst.id = 1;
  Ring ring;
  for (int k = 0; k < 64; ++k) {
    const double a = 2 * std::numbers::pi * k / 64;
    ring.push_back({32 + 16 * std::cos(a) * std::cos(0.4) - 9 * std::sin(a) * std::sin(0.4),
                    30 + 16 * std::cos(a) * std::sin(0.4) + 9 * std::sin(a) * std::cos(0.4)});
  }
  inst.mask = rasterize_polygon({ring}, 64, 64).mask;
  inst.bbox = bbox_from_mask(inst.mask);
  inst.features = FeatureGrid(kSuiteChannels, 64, 64);
  const auto dist = boundary_distance(inst.mask);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n;
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 64; ++c) {
      const double d = inst.mask.at(c, r) ? dist.at(c, r) : -dist.at(c, r);
      inst.features.at(0, r, c) = std::clamp(d / 4.0, -1.0, 1.0) + 0.5 * n(gen);
      for (int ch = 1; ch < kSuiteChannels; ++ch) inst.features.at(ch, r, c) = n(gen);
    }
  }

  TrainConfig cfg;
  cfg.coords = CoordMode::relative;
  cfg.supervision = SupervisionMode::full_grid;
  cfg.steps = 2000;
  const auto out = train_instance(inst, grid_targets(inst, cfg.grid), cfg);
  CHECK(evaluate_iou(inst, out.params, out.encoder) >= 0.90);
}

TEST_CASE("pooled-linear shared training") {
  const auto suite = generate_suite(4, 9);
  const auto sim = simulate_dataset(suite_dataset(suite), 10, 1);
  std::vector<TrainTargets> targets;
  for (const auto& inst : suite) targets.push_back(point_targets(inst, *sim.file.find(inst.id)));
  auto cfg = quick(40);
  cfg.mode = ParamHeadMode::pooled_linear;
  const auto a = train_shared(suite, targets, cfg);
  const auto b = train_shared(suite, targets, cfg);
  CHECK(a.head.mode() == ParamHeadMode::pooled_linear);
  CHECK(a.loss_curve == b.loss_curve);
  CHECK(a.loss_curve.back() < a.loss_curve.front());
  const auto d0 = pool_region(suite[0].features, suite[0].bbox);
  const auto d1 = pool_region(suite[1].features, suite[1].bbox);
  CHECK(a.head.generate(d0).flat != a.head.generate(d1).flat);
  CHECK_THROWS(train_instance(suite[0], targets[0], cfg));
}

TEST_CASE("experiment drivers produce complete rows") {
  const auto suite = generate_suite(3, 2);
  SweepOptions o;
  o.n_list = {1, 5};
  o.seeds = {0, 1};
  o.base = quick(20);
  o.threads = 1;
  const auto rows = run_point_sweep(suite, o);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].name == "P1");
  CHECK(rows[2].name == "full");
  CHECK(rows[2].supervision == SupervisionMode::full_grid);
  for (const auto& r : rows) {
    CHECK(r.seed_means.size() == 2);
    CHECK(r.mean_iou >= 0.0);
    CHECK(r.mean_iou <= 1.0);
  }
  CHECK(rows[2].std_iou == 0.0);
  const auto csv = rows_to_csv(rows);
  CHECK(csv.rfind("name,mode,supervision,n_points,coords,augment,noise_mode,noise_rate,n_seeds,mean_iou", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  o.seeds = {0};
  o.base.n_points = 5;
  const auto ab = run_ablations(suite, o);
  CHECK(ab.size() == 18);
  CHECK(ab[0].name == "free:none/none");
  const auto aug = run_augmentation_ablation(suite, o);
  CHECK(aug.size() == 6);
  CHECK(aug[1].augment);
}

TEST_CASE("spearman") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3}, {1, 8, 27}) == doctest::Approx(1.0));
  // Ties use average ranks: ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4).
  CHECK(spearman({1, 2, 2, 3}, {1, 2, 3, 4}) == doctest::Approx(4.5 / std::sqrt(4.5 * 5.0)));
  CHECK_THROWS(spearman({1}, {1}));
}
