#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace pointsup {

/// Per-stage annotation timings in seconds per instance. Defaults are the
/// COCO figures: category labeling and instance spotting as reported by
/// the dataset authors, a box by extreme clicking, one point label, and a
/// polygon mask.
struct BudgetParams {
  double t_category = 28.8;
  double t_spotting = 14.4;
  double t_box = 7.0;
  double t_point = 0.9;
  double t_mask = 79.2;

  double stage_time() const noexcept { return t_category + t_spotting; }
  void validate() const;
};

enum class SupervisionForm : std::uint8_t { box, mask, points };

struct Supervision {
  SupervisionForm form = SupervisionForm::box;
  int n_points = 0;  ///< only for SupervisionForm::points

  static Supervision box() { return {SupervisionForm::box, 0}; }
  static Supervision mask() { return {SupervisionForm::mask, 0}; }
  static Supervision points(int n) { return {SupervisionForm::points, n}; }
};

std::string to_string(const Supervision& kind);

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr std::int64_t kCocoTrainInstances = 849949;

/// Seconds per instance, with the categorization and spotting stages when
/// include_stages is set.
double per_instance_time(const Supervision& kind, const BudgetParams& params, bool include_stages);

/// Per-instance time with an explicit stage time t in place of the COCO
/// stage constants.
double per_instance_time_at(const Supervision& kind, const BudgetParams& params, double stage_time);

/// Whole-dataset annotation time in days (stages included).
double dataset_time_days(const Supervision& kind, std::int64_t n_instances, const BudgetParams& params);

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Range of stage times t >= 0 where point supervision on fraction_point of
/// the data is strictly cheaper than both boxes on fraction_box and masks
/// on fraction_mask.
struct BreakEven {
  double low = 0.0;
  double high = kUnbounded;  ///< kUnbounded when points stay cheaper forever
  bool empty = false;
  /// A comparison line coincides with the point line (equal fraction and
  /// intercept), so points are never strictly cheaper.
  bool degenerate = false;
};

BreakEven break_even_interval(double fraction_box, double fraction_mask, double fraction_point,
                              const BudgetParams& params, int n_points);

struct TradeoffRow {
  double fraction = 0.0;
  double days = 0.0;
};

/// Annotation days for training on each data fraction (stages included).
std::vector<TradeoffRow> tradeoff_curve(const Supervision& kind, const std::vector<double>& fractions,
                                        const BudgetParams& params, std::int64_t n_instances);

}  // namespace pointsup
