#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pointsup/annotation_sim.hpp"
#include "pointsup/dataset.hpp"
#include "pointsup/implicit_head.hpp"
#include "pointsup/subdivision.hpp"

namespace pointsup {

/// Synthetic stand-in for a detected object: a mask and a feature map.
struct SyntheticInstance {
  std::int64_t id = 0;
  Bitmask mask;
  BoundingBox bbox;
  FeatureGrid features;
};

struct SuiteConfig {
  int image_size = 64;
  /// Std of per-pixel noise on the signed-distance channel.
  double feature_noise = 0.5;
  /// Signed distance is divided by this many pixels, then clipped to [-1, 1].
  double distance_scale = 4.0;
  /// Gaussian blur (pixels) of the mask-derived channels and their noise,
  /// standing in for the limited localization of strided backbone features.
  double feature_blur = 0.0;
  double min_area_fraction = 0.10;
  double max_area_fraction = 0.80;
};

inline constexpr int kSuiteChannels = 8;

/// Deterministic suite of ellipses and star polygons. Feature channels:
/// 0 noisy blurred signed distance, 1-3 smooth fields correlated with the
/// mask, 4-7 pure noise.
std::vector<SyntheticInstance> generate_suite(int n_instances, std::uint64_t seed,
                                              const SuiteConfig& cfg = {});

/// One image per instance, ids preserved; used to run the annotation
/// simulator over a suite.
Dataset suite_dataset(const std::vector<SyntheticInstance>& suite, const std::string& id = "toy-suite");

enum class SupervisionMode : std::uint8_t { points, full_grid };

struct TrainConfig {
  SupervisionMode supervision = SupervisionMode::points;
  int n_points = 10;
  int grid = 28;  ///< G for full-grid supervision
  int steps = 300;
  double learning_rate = 0.05;
  double momentum = 0.9;
  bool augment = false;
  ParamHeadMode mode = ParamHeadMode::free;
  CoordMode coords = CoordMode::fourier;
  int fourier_m = 64;
  double fourier_sigma = 1.0;
  std::array<int, 3> hidden{32, 32, 32};
  double l2_weight = kDefaultL2Weight;
  std::uint64_t init_seed = 0;
  std::uint64_t point_seed = 0;
  std::uint64_t augment_seed = 0;
  NoiseConfig noise;
  std::uint64_t fourier_seed = 0;

  void validate() const;
};

/// Image-space supervision targets for one instance.
struct TrainTargets {
  std::vector<Vec2> points;
  std::vector<std::uint8_t> labels;
  std::vector<double> weights;

  std::size_t size() const noexcept { return points.size(); }
};

/// Labels on the G x G cell centers of the box, row-major.
TrainTargets grid_targets(const SyntheticInstance& instance, int grid);
/// Annotated points, weighted by containment in the instance box.
TrainTargets point_targets(const SyntheticInstance& instance, const PointAnnotation& annotation);

CoordEncoder make_encoder(const TrainConfig& cfg);
HeadArch make_arch(const TrainConfig& cfg, int feature_dim, const CoordEncoder& encoder);

/// [sampled features; encoded box-relative coordinates] per point.
HeadInputs assemble_inputs(const SyntheticInstance& instance, const CoordEncoder& encoder,
                           std::span<const Vec2> image_points);

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

struct TrainOutcome {
  PointHeadParams params;
  CoordEncoder encoder;
  /// Total loss (BCE + l2) evaluated before each update.
  std::vector<double> loss_curve;
};

/// Momentum gradient descent on point BCE + l2 parameter loss for a
/// free-mode head. With no supervised target the initial parameters are
/// returned untouched. Throws TrainingDiverged on a non-finite loss.
TrainOutcome train_instance(const SyntheticInstance& instance, const TrainTargets& targets,
                            const TrainConfig& cfg);

struct SharedOutcome {
  ParamHead head;
  CoordEncoder encoder;
  std::vector<double> loss_curve;  ///< mean over instances
};

/// Jointly trains a pooled-linear parameter head over several instances;
/// each instance's descriptor is pool_region of its features over its box.
SharedOutcome train_shared(const std::vector<SyntheticInstance>& instances,
                           const std::vector<TrainTargets>& targets, const TrainConfig& cfg);

/// Probability of the head at box-normalized coordinates.
PointFunction head_point_function(const SyntheticInstance& instance, const PointHeadParams& params,
                                  const CoordEncoder& encoder);

/// Ground-truth mask resampled on a res x res grid over the box.
Bitmask reference_mask(const SyntheticInstance& instance, int res);

/// IoU of the thresholded subdivision render against the reference mask.
double evaluate_iou(const SyntheticInstance& instance, const PointHeadParams& params,
                    const CoordEncoder& encoder, const RenderConfig& render = {});

struct ExperimentRow {
  std::string name;
  ParamHeadMode mode = ParamHeadMode::free;
  SupervisionMode supervision = SupervisionMode::points;
  int n_points = 0;
  CoordMode coords = CoordMode::fourier;
  bool augment = false;
  NoiseConfig noise;
  std::vector<double> seed_means;  ///< mean IoU over instances, per seed
  double mean_iou = 0.0;           ///< mean of seed_means
  double std_iou = 0.0;            ///< population std of seed_means
  double mean_instance_std = 0.0;  ///< std over instances, averaged over seeds
};

struct SweepOptions {
  std::vector<int> n_list{1, 2, 5, 10, 20, 50};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  TrainConfig base;
  RenderConfig render;
  /// Worker threads; 0 picks hardware concurrency.
  unsigned threads = 0;
};

/// Mean IoU per point count over point-location reseedings, plus the
/// full-grid reference row (name "full").
std::vector<ExperimentRow> run_point_sweep(const std::vector<SyntheticInstance>& suite,
                                           const SweepOptions& options);

/// {none, rel, pe} x {augment off, on} x {clean, random 5%, boundary 5%}
/// under point supervision with options.base.n_points, in options.base.mode.
/// Pooled-linear rows train one shared head per (seed, configuration).
std::vector<ExperimentRow> run_ablations(const std::vector<SyntheticInstance>& suite,
                                         const SweepOptions& options, double noise_rate = 0.05);

/// {none, rel, pe} x {augment off, on} with options.base (mode, noise).
std::vector<ExperimentRow> run_augmentation_ablation(const std::vector<SyntheticInstance>& suite,
                                                     const SweepOptions& options);

std::string rows_to_csv(const std::vector<ExperimentRow>& rows);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace pointsup
