#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pointsup/dataset.hpp"
#include "pointsup/geometry.hpp"
#include "pointsup/random.hpp"

namespace pointsup {

enum class PointLabel : std::uint8_t { background = 0, object = 1 };
enum class PointSource : std::uint8_t { simulated, human };

struct LabeledPoint {
  double x = 0.0;
  double y = 0.0;
  PointLabel label = PointLabel::background;
  PointSource source = PointSource::simulated;

  friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

enum class NoiseMode : std::uint8_t { none, random, boundary };

struct NoiseConfig {
  NoiseMode mode = NoiseMode::none;
  double rate = 0.0;
};

struct FlipRecord {
  std::int64_t instance_id = 0;
  std::size_t point_index = 0;

  friend bool operator==(const FlipRecord&, const FlipRecord&) = default;
};

struct AnnotationMeta {
  int n_points = 0;
  std::uint64_t seed = 0;
  NoiseMode noise_mode = NoiseMode::none;
  double noise_rate = 0.0;
  std::string dataset_id;
  /// Every label flipped by noise injection, sorted by (instance, index).
  std::vector<FlipRecord> flipped;

  friend bool operator==(const AnnotationMeta&, const AnnotationMeta&) = default;
};

/// N labeled points for one instance.
struct PointAnnotation {
  std::int64_t instance_id = 0;
  std::vector<LabeledPoint> points;

  friend bool operator==(const PointAnnotation&, const PointAnnotation&) = default;
};

struct PointAnnotationFile {
  AnnotationMeta meta;
  std::vector<PointAnnotation> annotations;

  const PointAnnotation* find(std::int64_t instance_id) const;
  std::size_t total_points() const;

  friend bool operator==(const PointAnnotationFile&, const PointAnnotationFile&) = default;
};

const char* to_string(NoiseMode mode) noexcept;
NoiseMode noise_mode_from_string(const std::string& name);

std::string annotation_file_to_json(const PointAnnotationFile& file);
PointAnnotationFile parse_annotation_file(const std::string& json_text);
void save_annotation_file(const PointAnnotationFile& file, const std::filesystem::path& path);
PointAnnotationFile load_annotation_file(const std::filesystem::path& path);

/// Per-instance random stream for a simulation seed.
Rng instance_stream(std::uint64_t seed, std::int64_t instance_id);

/// n i.i.d. points uniform over [x, x+w) x [y, y+h).
std::vector<Vec2> sample_uniform_points(const BoundingBox& box, int n, Rng& rng);
std::vector<Vec2> sample_uniform_points(const BoundingBox& box, int n, std::uint64_t seed);

/// Labels from the ground-truth pixel containing each point. Throws if a
/// point falls outside the image.
std::vector<LabeledPoint> label_points(const std::vector<Vec2>& points,
                                       const InstanceRecord& instance);

enum class BoundaryBias : std::uint8_t { mild, heavy };

struct BoundaryBiasConfig {
  double beta_mild = 0.5;
  double beta_heavy = 1.0;
  double max_distance = 2.0;  ///< pixels within this boundary distance count as near
};

struct BiasedSample {
  std::vector<Vec2> points;
  /// No in-box pixel was near the boundary; sampling fell back to uniform.
  bool fell_back = false;
};

/// Mixture sampler: with probability beta a point is drawn uniformly from
/// the near-boundary pixels inside the box (jittered within the pixel),
/// otherwise uniformly from the box.
BiasedSample sample_boundary_biased(const InstanceRecord& instance, int n, BoundaryBias bias,
                                    std::uint64_t seed, const BoundaryBiasConfig& cfg = {});
/// Same with an explicit mixture weight.
BiasedSample sample_boundary_mixture(const InstanceRecord& instance, int n, double beta,
                                     double max_distance, Rng& rng);

/// Flip exactly floor(rate * total) labels dataset-wide. Random mode picks
/// uniformly; boundary mode flips the points with the smallest boundary
/// distance, ties broken by (instance_id, point index). Flips are recorded
/// in meta.flipped.
PointAnnotationFile inject_label_noise(const PointAnnotationFile& file, const Dataset& dataset,
                                       NoiseConfig noise, std::uint64_t seed);

/// floor(rate * total) with a guard against representation error in rate.
std::size_t noise_flip_count(double rate, std::size_t total);

struct SimulationResult {
  PointAnnotationFile file;
  /// Instances skipped because their mask is empty.
  std::vector<std::int64_t> skipped;
};

/// One PointAnnotation per instance, boxes re-derived from masks, noise
/// applied last. Reproducible for the same inputs.
SimulationResult simulate_dataset(const Dataset& dataset, int n_points, std::uint64_t seed,
                                  NoiseConfig noise = {});

/// Fraction of labels matching the ground truth at the same locations.
/// nullopt when there are no points.
std::optional<double> agreement(const PointAnnotation& annotation, const InstanceRecord& instance);
/// Pooled over all points of a file.
std::optional<double> dataset_agreement(const PointAnnotationFile& file, const Dataset& dataset);

}  // namespace pointsup
