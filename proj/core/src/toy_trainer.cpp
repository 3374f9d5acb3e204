#include "pointsup/toy_trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include "pointsup/mask.hpp"
#include "pointsup/point_loss.hpp"
#include "pointsup/random.hpp"

namespace pointsup {
namespace {

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Ring ellipse_ring(Vec2 c, double a, double b, double theta) {
  Ring ring;
  constexpr int kVertices = 72;
  for (int k = 0; k < kVertices; ++k) {
    const double t = 2.0 * std::numbers::pi * k / kVertices;
    const double ex = a * std::cos(t);
    const double ey = b * std::sin(t);
    ring.push_back({c.x + ex * std::cos(theta) - ey * std::sin(theta),
                    c.y + ex * std::sin(theta) + ey * std::cos(theta)});
  }
  return ring;
}

Ring star_ring(Vec2 c, double radius, Rng& rng) {
  const int k = 5 + static_cast<int>(rng.index(5));
  const double phase = 2.0 * std::numbers::pi * rng.uniform();
  Ring ring;
  for (int i = 0; i < k; ++i) {
    const double t = phase + 2.0 * std::numbers::pi * (i + 0.3 * (rng.uniform() - 0.5)) / k;
    const double r = radius * (0.55 + 0.45 * rng.uniform());
    ring.push_back({c.x + r * std::cos(t), c.y + r * std::sin(t)});
  }
  return ring;
}

// Sum of three random low-frequency plane waves, roughly unit variance.
std::vector<double> smooth_field(int size, Rng& rng) {
  std::vector<double> f(static_cast<std::size_t>(size) * size, 0.0);
  for (int w = 0; w < 3; ++w) {
    const double kx = (rng.uniform() * 2.0 - 1.0) * 2.0;
    const double ky = (rng.uniform() * 2.0 - 1.0) * 2.0;
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        f[std::size_t(r) * size + c] +=
            std::sqrt(2.0 / 3.0) *
            std::sin(2.0 * std::numbers::pi * (kx * (c + 0.5) + ky * (r + 0.5)) / size + phase);
      }
    }
  }
  return f;
}

// Separable Gaussian blur with clamped borders.
std::vector<double> blur(const std::vector<double>& src, int size, double sigma) {
  if (sigma <= 0.0) return src;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k) kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
  const double total = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (auto& k : kernel) k /= total;
  std::vector<double> tmp(src.size(), 0.0), out(src.size(), 0.0);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * src[std::size_t(r) * size + std::clamp(c + k, 0, size - 1)];
      tmp[std::size_t(r) * size + c] = acc;
    }
  }
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp[std::size_t(std::clamp(r + k, 0, size - 1)) * size + c];
      out[std::size_t(r) * size + c] = acc;
    }
  }
  return out;
}

SyntheticInstance make_instance(std::int64_t id, std::uint64_t seed, const SuiteConfig& cfg) {
  Rng rng = Rng::stream(seed ^ kSuiteStreamKey, static_cast<std::uint64_t>(id));
  const int size = cfg.image_size;
  const double s = size / 64.0;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Vec2 c{size * (0.3 + 0.4 * rng.uniform()), size * (0.3 + 0.4 * rng.uniform())};
    Ring ring;
    if (rng.uniform() < 0.5) {
      ring = ellipse_ring(c, s * (6.0 + 12.0 * rng.uniform()), s * (6.0 + 12.0 * rng.uniform()),
                          std::numbers::pi * rng.uniform());
    } else {
      ring = star_ring(c, s * (9.0 + 10.0 * rng.uniform()), rng);
    }
    auto raster = rasterize_polygon({ring}, size, size);
    const std::size_t area = raster.mask.count();
    if (area == 0) continue;
    const BoundingBox box = bbox_from_mask(raster.mask);
    const double frac = static_cast<double>(area) / (box.w * box.h);
    if (frac < cfg.min_area_fraction || frac > cfg.max_area_fraction) continue;

    SyntheticInstance inst;
    inst.id = id;
    inst.mask = std::move(raster.mask);
    inst.bbox = box;
    inst.features = FeatureGrid(kSuiteChannels, size, size);
    const DistanceField dist = boundary_distance(inst.mask);
    const std::size_t n = static_cast<std::size_t>(size) * size;
    std::vector<double> sd(n), noise(n);
    for (int r = 0; r < size; ++r) {
      for (int col = 0; col < size; ++col) {
        const double d = dist.at(col, r);
        sd[std::size_t(r) * size + col] = std::clamp((inst.mask.at(col, r) ? d : -d) / cfg.distance_scale, -1.0, 1.0);
      }
    }
    for (auto& v : noise) v = rng.normal();
    sd = blur(sd, size, cfg.feature_blur);
    noise = blur(noise, size, cfg.feature_blur);
    // Blurring shrinks the noise variance; rescale to unit std.
    double var = 0.0;
    for (const double v : noise) var += v * v;
    const double noise_scale = var > 0.0 ? std::sqrt(n / var) : 0.0;
    std::array<std::vector<double>, 3> smooth{smooth_field(size, rng), smooth_field(size, rng),
                                              smooth_field(size, rng)};
    constexpr std::array<double, 3> kMix{0.7, 0.5, 0.3};
    for (int r = 0; r < size; ++r) {
      for (int col = 0; col < size; ++col) {
        const std::size_t i = std::size_t(r) * size + col;
        inst.features.at(0, r, col) = sd[i] + cfg.feature_noise * noise_scale * noise[i];
        for (int k = 0; k < 3; ++k) {
          inst.features.at(1 + k, r, col) = kMix[k] * sd[i] + (1.0 - kMix[k]) * smooth[k][i];
        }
        for (int k = 4; k < kSuiteChannels; ++k) inst.features.at(k, r, col) = rng.normal();
      }
    }
    return inst;
  }
  throw Error("generate_suite: could not place a shape");
}

std::uint64_t instance_seed(std::uint64_t seed, std::int64_t id) {
  return splitmix64(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(id + 1));
}

void momentum_step(std::vector<double>& theta, std::vector<double>& velocity,
                   const std::vector<double>& grad, double lr, double mu) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    velocity[i] = mu * velocity[i] + grad[i];
    theta[i] -= lr * velocity[i];
  }
}

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void summarize(ExperimentRow& row, const std::vector<std::vector<double>>& ious) {
  row.seed_means.clear();
  double inst_std = 0.0;
  for (const auto& per_seed : ious) {
    const double m = std::accumulate(per_seed.begin(), per_seed.end(), 0.0) / per_seed.size();
    row.seed_means.push_back(m);
    double v = 0.0;
    for (const double x : per_seed) v += (x - m) * (x - m);
    inst_std += std::sqrt(v / per_seed.size());
  }
  const double n = static_cast<double>(row.seed_means.size());
  row.mean_iou = std::accumulate(row.seed_means.begin(), row.seed_means.end(), 0.0) / n;
  double var = 0.0;
  for (const double m : row.seed_means) var += (m - row.mean_iou) * (m - row.mean_iou);
  row.std_iou = std::sqrt(var / n);
  row.mean_instance_std = inst_std / n;
}

// Per-instance IoU for point supervision from one simulated annotation file.
std::vector<double> point_ious(const std::vector<SyntheticInstance>& suite, const PointAnnotationFile& file,
                               const TrainConfig& cfg, const RenderConfig& render, unsigned threads) {
  std::vector<double> ious(suite.size(), 0.0);
  if (cfg.mode == ParamHeadMode::pooled_linear) {
    std::vector<TrainTargets> targets;
    for (const auto& inst : suite) {
      const PointAnnotation* ann = file.find(inst.id);
      if (ann == nullptr) throw Error("sweep: instance missing from simulated annotations");
      targets.push_back(point_targets(inst, *ann));
    }
    TrainConfig local = cfg;
    local.augment_seed = cfg.augment_seed ^ file.meta.seed;
    const SharedOutcome shared = train_shared(suite, targets, local);
    parallel_for(suite.size(), threads, [&](std::size_t i) {
      const auto params = shared.head.generate(pool_region(suite[i].features, suite[i].bbox));
      ious[i] = evaluate_iou(suite[i], params, shared.encoder, render);
    });
    return ious;
  }
  parallel_for(suite.size(), threads, [&](std::size_t i) {
    const auto& inst = suite[i];
    const PointAnnotation* ann = file.find(inst.id);
    if (ann == nullptr) throw Error("sweep: instance missing from simulated annotations");
    TrainConfig local = cfg;
    local.init_seed = instance_seed(cfg.init_seed, inst.id);
    local.augment_seed = instance_seed(cfg.augment_seed ^ file.meta.seed, inst.id);
    const auto outcome = train_instance(inst, point_targets(inst, *ann), local);
    ious[i] = evaluate_iou(inst, outcome.params, outcome.encoder, render);
  });
  return ious;
}

}  // namespace

std::vector<SyntheticInstance> generate_suite(int n_instances, std::uint64_t seed, const SuiteConfig& cfg) {
  if (n_instances < 1) throw Error("generate_suite: need at least one instance");
  if (cfg.image_size < 16) throw Error("generate_suite: image too small");
  std::vector<SyntheticInstance> suite;
  suite.reserve(static_cast<std::size_t>(n_instances));
  for (int i = 0; i < n_instances; ++i) suite.push_back(make_instance(i + 1, seed, cfg));
  return suite;
}

Dataset suite_dataset(const std::vector<SyntheticInstance>& suite, const std::string& id) {
  Dataset ds;
  ds.id = id;
  for (const auto& inst : suite) {
    ds.images.push_back({inst.id, "toy_" + std::to_string(inst.id) + ".png", inst.mask.width(),
                         inst.mask.height()});
    ds.instances.push_back({inst.id, inst.id, "shape", inst.bbox, inst.mask, true});
  }
  return ds;
}

void TrainConfig::validate() const {
  if (steps < 1) throw Error("TrainConfig: steps must be >= 1");
  if (!(learning_rate > 0.0)) throw Error("TrainConfig: learning rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw Error("TrainConfig: momentum must lie in [0, 1)");
  if (n_points < 0) throw Error("TrainConfig: negative point count");
  if (grid < 1) throw Error("TrainConfig: grid must be >= 1");
}

TrainTargets grid_targets(const SyntheticInstance& instance, int grid) {
  TrainTargets t;
  t.labels = grid_labels_from_mask(instance.mask, instance.bbox, grid, grid);
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) t.points.push_back(grid_cell_center(instance.bbox, c, r, grid, grid));
  }
  t.weights.assign(t.points.size(), 1.0);
  return t;
}

TrainTargets point_targets(const SyntheticInstance& instance, const PointAnnotation& annotation) {
  const PointBatch batch = filter_points_to_box(annotation.points, instance.bbox);
  TrainTargets t;
  for (const auto& p : annotation.points) t.points.push_back({p.x, p.y});
  t.labels = batch.labels;
  t.weights = batch.weights;
  return t;
}

CoordEncoder make_encoder(const TrainConfig& cfg) {
  switch (cfg.coords) {
    case CoordMode::none: return CoordEncoder::none();
    case CoordMode::relative: return CoordEncoder::relative();
    case CoordMode::fourier:
      return CoordEncoder::fourier(FourierEncoding::make(cfg.fourier_m, cfg.fourier_sigma, cfg.fourier_seed));
  }
  return CoordEncoder::none();
}

HeadArch make_arch(const TrainConfig& cfg, int feature_dim, const CoordEncoder& encoder) {
  HeadArch arch;
  arch.feature_dim = feature_dim;
  arch.pe_dim = encoder.dim();
  arch.hidden = cfg.hidden;
  arch.validate();
  return arch;
}

HeadInputs assemble_inputs(const SyntheticInstance& instance, const CoordEncoder& encoder,
                           std::span<const Vec2> image_points) {
  const int fdim = instance.features.channels;
  HeadInputs in(fdim + encoder.dim(), image_points.size());
  for (std::size_t i = 0; i < image_points.size(); ++i) {
    auto col = in.column(i);
    sample_point_features(instance.features, image_points[i], col.first(static_cast<std::size_t>(fdim)));
    encoder.encode(box_relative(instance.bbox, image_points[i]), col.subspan(static_cast<std::size_t>(fdim)));
  }
  return in;
}

TrainOutcome train_instance(const SyntheticInstance& instance, const TrainTargets& targets,
                            const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.mode != ParamHeadMode::free) {
    throw Error("train_instance trains free-mode heads; use train_shared for pooled-linear");
  }
  TrainOutcome out;
  out.encoder = make_encoder(cfg);
  const HeadArch arch = make_arch(cfg, instance.features.channels, out.encoder);
  ParamHead head = ParamHead::make_free(arch, cfg.init_seed);
  out.params = head.generate();

  const double supervised = std::accumulate(targets.weights.begin(), targets.weights.end(), 0.0);
  if (targets.size() == 0 || supervised <= 0.0) return out;

  const HeadInputs all_inputs = assemble_inputs(instance, out.encoder, targets.points);
  std::vector<double> velocity(out.params.flat.size(), 0.0);
  std::vector<double> grad;
  std::vector<std::uint8_t> labels;
  std::vector<double> weights;
  out.loss_curve.reserve(static_cast<std::size_t>(cfg.steps));

  for (int step = 0; step < cfg.steps; ++step) {
    const HeadInputs* inputs = &all_inputs;
    HeadInputs subset;
    std::span<const std::uint8_t> step_labels = targets.labels;
    std::span<const double> step_weights = targets.weights;
    if (cfg.augment) {
      const auto idx = augment_indices(targets.size(), cfg.augment_seed, static_cast<std::uint64_t>(step));
      subset = all_inputs.select(idx);
      inputs = &subset;
      labels.clear();
      weights.clear();
      for (const auto i : idx) {
        labels.push_back(targets.labels[i]);
        weights.push_back(targets.weights[i]);
      }
      step_labels = labels;
      step_weights = weights;
    }
    const auto logits = head_forward_batch(out.params, *inputs);
    const BceResult bce = point_bce(logits, step_labels, step_weights);
    L2Result l2 = l2_param_loss(out.params.flat, cfg.l2_weight);
    const double loss = bce.loss + l2.loss;
    if (!std::isfinite(loss)) {
      throw TrainingDiverged("training diverged at step " + std::to_string(step) + " (loss " +
                             std::to_string(loss) + ", lr " + std::to_string(cfg.learning_rate) +
                             ", instance " + std::to_string(instance.id) + ")");
    }
    out.loss_curve.push_back(loss);
    grad = std::move(l2.grad);
    head_backward_batch(out.params, *inputs, bce.grad, grad);
    momentum_step(out.params.flat, velocity, grad, cfg.learning_rate, cfg.momentum);
  }
  return out;
}

SharedOutcome train_shared(const std::vector<SyntheticInstance>& instances,
                           const std::vector<TrainTargets>& targets, const TrainConfig& cfg) {
  cfg.validate();
  if (instances.size() != targets.size() || instances.empty()) {
    throw Error("train_shared: need one target set per instance");
  }
  const CoordEncoder encoder = make_encoder(cfg);
  const HeadArch arch = make_arch(cfg, instances.front().features.channels, encoder);
  SharedOutcome out{ParamHead::make_pooled_linear(arch, instances.front().features.channels, cfg.init_seed),
                    encoder, {}};

  std::vector<std::vector<double>> descriptors;
  std::vector<HeadInputs> inputs;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    descriptors.push_back(pool_region(instances[i].features, instances[i].bbox));
    inputs.push_back(assemble_inputs(instances[i], encoder, targets[i].points));
  }
  auto trainable = out.head.trainable();
  std::vector<double> velocity(trainable.size(), 0.0);
  std::vector<double> grad(trainable.size());
  std::vector<double> dparams(arch.param_count());
  const double inv_n = 1.0 / static_cast<double>(instances.size());

  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const PointHeadParams params = out.head.generate(descriptors[i]);
      const HeadInputs* step_inputs = &inputs[i];
      HeadInputs subset;
      std::vector<std::uint8_t> labels = targets[i].labels;
      std::vector<double> weights = targets[i].weights;
      if (cfg.augment && targets[i].size() > 0) {
        const auto idx = augment_indices(targets[i].size(), instance_seed(cfg.augment_seed, instances[i].id),
                                         static_cast<std::uint64_t>(step));
        subset = inputs[i].select(idx);
        step_inputs = &subset;
        labels.clear();
        weights.clear();
        for (const auto k : idx) {
          labels.push_back(targets[i].labels[k]);
          weights.push_back(targets[i].weights[k]);
        }
      }
      const auto logits = head_forward_batch(params, *step_inputs);
      BceResult bce = point_bce(logits, labels, weights);
      L2Result l2 = l2_param_loss(params.flat, cfg.l2_weight);
      loss += inv_n * (bce.loss + l2.loss);
      for (auto& g : bce.grad) g *= inv_n;
      dparams.assign(params.flat.size(), 0.0);
      for (std::size_t k = 0; k < dparams.size(); ++k) dparams[k] = inv_n * l2.grad[k];
      head_backward_batch(params, *step_inputs, bce.grad, dparams);
      out.head.accumulate_gradient(descriptors[i], dparams, grad);
    }
    if (!std::isfinite(loss)) {
      throw TrainingDiverged("shared training diverged at step " + std::to_string(step));
    }
    out.loss_curve.push_back(loss);
    for (std::size_t k = 0; k < trainable.size(); ++k) {
      velocity[k] = cfg.momentum * velocity[k] + grad[k];
      trainable[k] -= cfg.learning_rate * velocity[k];
    }
  }
  return out;
}

PointFunction head_point_function(const SyntheticInstance& instance, const PointHeadParams& params,
                                  const CoordEncoder& encoder) {
  return [&instance, &params, &encoder](std::span<const Vec2> uv, std::span<double> out) {
    std::vector<Vec2> pts(uv.size());
    for (std::size_t i = 0; i < uv.size(); ++i) pts[i] = instance.bbox.at_normalized(uv[i].x, uv[i].y);
    const auto logits = head_forward_batch(params, assemble_inputs(instance, encoder, pts));
    for (std::size_t i = 0; i < uv.size(); ++i) out[i] = sigmoid(logits[i]);
  };
}

Bitmask reference_mask(const SyntheticInstance& instance, int res) {
  return Bitmask(res, res, grid_labels_from_mask(instance.mask, instance.bbox, res, res));
}

double evaluate_iou(const SyntheticInstance& instance, const PointHeadParams& params,
                    const CoordEncoder& encoder, const RenderConfig& render) {
  const auto rendered = pointsup::render(head_point_function(instance, params, encoder), render);
  return mask_iou(threshold(rendered.grid, render.space), reference_mask(instance, render.target_res));
}

std::vector<ExperimentRow> run_point_sweep(const std::vector<SyntheticInstance>& suite,
                                           const SweepOptions& options) {
  if (options.seeds.empty()) throw Error("sweep: need at least one seed");
  const Dataset ds = suite_dataset(suite);
  std::vector<ExperimentRow> rows;
  for (const int n : options.n_list) {
    ExperimentRow row;
    row.name = "P" + std::to_string(n);
    row.n_points = n;
    row.coords = options.base.coords;
    row.augment = options.base.augment;
    row.noise = options.base.noise;
    std::vector<std::vector<double>> ious;
    for (const auto seed : options.seeds) {
      const auto sim = simulate_dataset(ds, n, seed, options.base.noise);
      TrainConfig cfg = options.base;
      cfg.n_points = n;
      cfg.supervision = SupervisionMode::points;
      ious.push_back(point_ious(suite, sim.file, cfg, options.render, options.threads));
    }
    summarize(row, ious);
    rows.push_back(std::move(row));
  }

  ExperimentRow full;
  full.name = "full";
  full.supervision = SupervisionMode::full_grid;
  full.n_points = options.base.grid * options.base.grid;
  full.coords = options.base.coords;
  full.augment = false;
  std::vector<double> ious(suite.size());
  parallel_for(suite.size(), options.threads, [&](std::size_t i) {
    TrainConfig cfg = options.base;
    cfg.supervision = SupervisionMode::full_grid;
    cfg.augment = false;
    cfg.init_seed = instance_seed(options.base.init_seed, suite[i].id);
    const auto outcome = train_instance(suite[i], grid_targets(suite[i], cfg.grid), cfg);
    ious[i] = evaluate_iou(suite[i], outcome.params, outcome.encoder, options.render);
  });
  // Full-grid supervision does not depend on point locations.
  summarize(full, std::vector<std::vector<double>>(options.seeds.size(), ious));
  rows.push_back(std::move(full));
  return rows;
}

std::vector<ExperimentRow> run_ablations(const std::vector<SyntheticInstance>& suite,
                                         const SweepOptions& options, double noise_rate) {
  if (options.seeds.empty()) throw Error("ablations: need at least one seed");
  const Dataset ds = suite_dataset(suite);
  const int n = options.base.n_points;
  std::vector<ExperimentRow> rows;
  const std::array<NoiseConfig, 3> noises{NoiseConfig{NoiseMode::none, 0.0},
                                          NoiseConfig{NoiseMode::random, noise_rate},
                                          NoiseConfig{NoiseMode::boundary, noise_rate}};
  std::vector<std::vector<PointAnnotationFile>> files(noises.size());
  for (std::size_t k = 0; k < noises.size(); ++k) {
    for (const auto seed : options.seeds) files[k].push_back(simulate_dataset(ds, n, seed, noises[k]).file);
  }
  for (const CoordMode coords : {CoordMode::none, CoordMode::relative, CoordMode::fourier}) {
    for (const bool augment : {false, true}) {
      for (std::size_t k = 0; k < noises.size(); ++k) {
        ExperimentRow row;
        row.name = std::string(to_string(options.base.mode)) + ":" + to_string(coords) + (augment ? "+aug" : "") +
                   "/" + to_string(noises[k].mode);
        row.mode = options.base.mode;
        row.n_points = n;
        row.coords = coords;
        row.augment = augment;
        row.noise = noises[k];
        TrainConfig cfg = options.base;
        cfg.coords = coords;
        cfg.augment = augment;
        cfg.supervision = SupervisionMode::points;
        std::vector<std::vector<double>> ious;
        for (const auto& file : files[k]) ious.push_back(point_ious(suite, file, cfg, options.render, options.threads));
        summarize(row, ious);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<ExperimentRow> run_augmentation_ablation(const std::vector<SyntheticInstance>& suite,
                                                     const SweepOptions& options) {
  if (options.seeds.empty()) throw Error("augmentation ablation: need at least one seed");
  const Dataset ds = suite_dataset(suite);
  const int n = options.base.n_points;
  std::vector<PointAnnotationFile> files;
  for (const auto seed : options.seeds) files.push_back(simulate_dataset(ds, n, seed, options.base.noise).file);
  std::vector<ExperimentRow> rows;
  for (const CoordMode coords : {CoordMode::none, CoordMode::relative, CoordMode::fourier}) {
    for (const bool augment : {false, true}) {
      ExperimentRow row;
      row.name = std::string(to_string(options.base.mode)) + ":" + to_string(coords) + (augment ? "+aug" : "") +
                 "/" + to_string(options.base.noise.mode);
      row.mode = options.base.mode;
      row.n_points = n;
      row.coords = coords;
      row.augment = augment;
      row.noise = options.base.noise;
      TrainConfig cfg = options.base;
      cfg.coords = coords;
      cfg.augment = augment;
      cfg.supervision = SupervisionMode::points;
      std::vector<std::vector<double>> ious;
      for (const auto& file : files) ious.push_back(point_ious(suite, file, cfg, options.render, options.threads));
      summarize(row, ious);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string rows_to_csv(const std::vector<ExperimentRow>& rows) {
  std::ostringstream out;
  out.precision(6);
  out << "name,mode,supervision,n_points,coords,augment,noise_mode,noise_rate,n_seeds,mean_iou,std_iou,"
         "mean_instance_std\n";
  for (const auto& r : rows) {
    out << r.name << ',' << to_string(r.mode) << ',' << (r.supervision == SupervisionMode::points ? "points" : "full_grid") << ','
        << r.n_points << ',' << to_string(r.coords) << ',' << (r.augment ? 1 : 0) << ','
        << to_string(r.noise.mode) << ',' << r.noise.rate << ',' << r.seed_means.size() << ',' << r.mean_iou
        << ',' << r.std_iou << ',' << r.mean_instance_std << '\n';
  }
  return out.str();
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw Error("spearman: need two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

}  // namespace pointsup
