#include "pointsup/budget.hpp"

#include <algorithm>
#include <cmath>

#include "pointsup/geometry.hpp"

namespace pointsup {
namespace {

double annotation_time(const Supervision& kind, const BudgetParams& p) {
  switch (kind.form) {
    case SupervisionForm::box: return p.t_box;
    case SupervisionForm::mask: return p.t_mask;
    case SupervisionForm::points:
      if (kind.n_points < 0) throw Error("point supervision needs N >= 0");
      return p.t_box + kind.n_points * p.t_point;
  }
  return 0.0;
}

// Interval of t where fp * (t + ap) < fo * (t + ao).
struct Half {
  double low = -kUnbounded;
  double high = kUnbounded;
  bool empty = false;
  bool degenerate = false;
};

Half cheaper_than(double fp, double ap, double fo, double ao) {
  Half h;
  const double slope = fp - fo;
  const double rhs = fo * ao - fp * ap;
  if (slope == 0.0) {
    if (rhs == 0.0) {
      h.degenerate = true;
      h.empty = true;
    } else if (rhs < 0.0) {
      h.empty = true;
    }
    return h;
  }
  const double t = rhs / slope;
  if (slope > 0.0) {
    h.high = t;
  } else {
    h.low = t;
  }
  return h;
}

}  // namespace

void BudgetParams::validate() const {
  for (const double v : {t_category, t_spotting, t_box, t_point, t_mask}) {
    if (!(v >= 0.0)) throw Error("budget timings must be >= 0");
  }
}

std::string to_string(const Supervision& kind) {
  switch (kind.form) {
    case SupervisionForm::box: return "B";
    case SupervisionForm::mask: return "M";
    case SupervisionForm::points: return "P" + std::to_string(kind.n_points);
  }
  return "?";
}

double per_instance_time(const Supervision& kind, const BudgetParams& params, bool include_stages) {
  return per_instance_time_at(kind, params, include_stages ? params.stage_time() : 0.0);
}

double per_instance_time_at(const Supervision& kind, const BudgetParams& params, double stage_time) {
  params.validate();
  return stage_time + annotation_time(kind, params);
}

double dataset_time_days(const Supervision& kind, std::int64_t n_instances, const BudgetParams& params) {
  if (n_instances < 0) throw Error("instance count must be >= 0");
  return static_cast<double>(n_instances) * per_instance_time(kind, params, true) / kSecondsPerDay;
}

BreakEven break_even_interval(double fraction_box, double fraction_mask, double fraction_point,
                              const BudgetParams& params, int n_points) {
  for (const double f : {fraction_box, fraction_mask, fraction_point}) {
    if (!(f > 0.0 && f <= 1.0)) throw Error("break-even fractions must lie in (0, 1]");
  }
  params.validate();
  const double a_point = annotation_time(Supervision::points(n_points), params);
  const Half vs_box = cheaper_than(fraction_point, a_point, fraction_box, params.t_box);
  const Half vs_mask = cheaper_than(fraction_point, a_point, fraction_mask, params.t_mask);

  BreakEven r;
  r.degenerate = vs_box.degenerate || vs_mask.degenerate;
  r.low = std::max({0.0, vs_box.low, vs_mask.low});
  r.high = std::min(vs_box.high, vs_mask.high);
  r.empty = vs_box.empty || vs_mask.empty || !(r.low < r.high);
  return r;
}

std::vector<TradeoffRow> tradeoff_curve(const Supervision& kind, const std::vector<double>& fractions,
                                        const BudgetParams& params, std::int64_t n_instances) {
  double prev = 0.0;
  std::vector<TradeoffRow> rows;
  for (const double f : fractions) {
    if (!(f > 0.0 && f <= 1.0) || f < prev) {
      throw Error("tradeoff fractions must be ascending in (0, 1]");
    }
    prev = f;
    rows.push_back({f, f * dataset_time_days(kind, n_instances, params)});
  }
  return rows;
}

}  // namespace pointsup
