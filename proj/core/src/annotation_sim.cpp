#include "pointsup/annotation_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "pointsup/mask.hpp"

namespace pointsup {
namespace {

using nlohmann::json;

PointLabel flip(PointLabel l) {
  return l == PointLabel::object ? PointLabel::background : PointLabel::object;
}

PointLabel label_at(const InstanceRecord& instance, Vec2 p) {
  return instance.mask.at_point(p) ? PointLabel::object : PointLabel::background;
}

bool inside_image(const Bitmask& mask, Vec2 p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.y >= 0.0 &&
         p.x < mask.width() && p.y < mask.height();
}

// Coordinate inside [lo, lo + extent) for u in [0, 1).
double half_open(double lo, double extent, double u) {
  const double v = lo + u * extent;
  const double hi = lo + extent;
  return v < hi ? v : std::nextafter(hi, lo);
}

}  // namespace

const char* to_string(NoiseMode mode) noexcept {
  switch (mode) {
    case NoiseMode::none: return "none";
    case NoiseMode::random: return "random";
    case NoiseMode::boundary: return "boundary";
  }
  return "none";
}

NoiseMode noise_mode_from_string(const std::string& name) {
  if (name == "none") return NoiseMode::none;
  if (name == "random") return NoiseMode::random;
  if (name == "boundary") return NoiseMode::boundary;
  throw Error("unknown noise mode '" + name + "'");
}

const PointAnnotation* PointAnnotationFile::find(std::int64_t instance_id) const {
  for (const auto& a : annotations) {
    if (a.instance_id == instance_id) return &a;
  }
  return nullptr;
}

std::size_t PointAnnotationFile::total_points() const {
  std::size_t n = 0;
  for (const auto& a : annotations) n += a.points.size();
  return n;
}

std::string annotation_file_to_json(const PointAnnotationFile& file) {
  json flipped = json::array();
  for (const auto& f : file.meta.flipped) flipped.push_back({f.instance_id, f.point_index});
  json doc;
  doc["meta"] = {{"n_points", file.meta.n_points},
                 {"seed", file.meta.seed},
                 {"noise_mode", to_string(file.meta.noise_mode)},
                 {"noise_rate", file.meta.noise_rate},
                 {"dataset_id", file.meta.dataset_id},
                 {"flipped", std::move(flipped)}};
  doc["annotations"] = json::array();
  for (const auto& a : file.annotations) {
    json pts = json::array();
    for (const auto& p : a.points) {
      json jp{{"x", p.x}, {"y", p.y}, {"label", static_cast<int>(p.label)}};
      if (p.source == PointSource::human) jp["source"] = "human";
      pts.push_back(std::move(jp));
    }
    doc["annotations"].push_back({{"instance_id", a.instance_id}, {"points", std::move(pts)}});
  }
  return doc.dump();
}

PointAnnotationFile parse_annotation_file(const std::string& json_text) {
  PointAnnotationFile file;
  try {
    const json doc = json::parse(json_text);
    const auto& m = doc.at("meta");
    file.meta.n_points = m.at("n_points").get<int>();
    file.meta.seed = m.at("seed").get<std::uint64_t>();
    file.meta.noise_mode = noise_mode_from_string(m.at("noise_mode").get<std::string>());
    file.meta.noise_rate = m.at("noise_rate").get<double>();
    file.meta.dataset_id = m.value("dataset_id", std::string{});
    if (m.contains("flipped")) {
      for (const auto& f : m.at("flipped")) {
        file.meta.flipped.push_back({f.at(0).get<std::int64_t>(), f.at(1).get<std::size_t>()});
      }
    }
    for (const auto& ja : doc.at("annotations")) {
      PointAnnotation a;
      a.instance_id = ja.at("instance_id").get<std::int64_t>();
      for (const auto& jp : ja.at("points")) {
        LabeledPoint p;
        p.x = jp.at("x").get<double>();
        p.y = jp.at("y").get<double>();
        const int label = jp.at("label").get<int>();
        if (label != 0 && label != 1) throw Error("point label must be 0 or 1");
        p.label = static_cast<PointLabel>(label);
        p.source = jp.value("source", std::string{"simulated"}) == "human" ? PointSource::human
                                                                           : PointSource::simulated;
        a.points.push_back(p);
      }
      file.annotations.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("point annotation JSON: ") + e.what());
  }
  return file;
}

void save_annotation_file(const PointAnnotationFile& file, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << annotation_file_to_json(file) << '\n';
}

PointAnnotationFile load_annotation_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_annotation_file(ss.str());
}

Rng instance_stream(std::uint64_t seed, std::int64_t instance_id) {
  return Rng::stream(seed, static_cast<std::uint64_t>(instance_id));
}

std::vector<Vec2> sample_uniform_points(const BoundingBox& box, int n, Rng& rng) {
  if (!box.valid()) throw Error("sample_uniform_points: degenerate box");
  if (n < 0) throw Error("sample_uniform_points: negative count");
  std::vector<Vec2> points;
  points.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const double v = rng.uniform();
    points.push_back({half_open(box.x, box.w, u), half_open(box.y, box.h, v)});
  }
  return points;
}

std::vector<Vec2> sample_uniform_points(const BoundingBox& box, int n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_uniform_points(box, n, rng);
}

std::vector<LabeledPoint> label_points(const std::vector<Vec2>& points,
                                       const InstanceRecord& instance) {
  std::vector<LabeledPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (!inside_image(instance.mask, p)) {
      throw Error("label_points: point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                  ") outside image");
    }
    out.push_back({p.x, p.y, label_at(instance, p), PointSource::simulated});
  }
  return out;
}

BiasedSample sample_boundary_mixture(const InstanceRecord& instance, int n, double beta,
                                     double max_distance, Rng& rng) {
  if (beta < 0.0 || beta > 1.0) throw Error("boundary mixture weight outside [0, 1]");
  const BoundingBox& box = instance.bbox;
  if (!box.valid()) throw Error("sample_boundary_biased: degenerate box");

  // Pixels whose cell lies fully inside the box and near the boundary.
  const DistanceField field = boundary_distance(instance.mask);
  const int c0 = std::max(0, static_cast<int>(std::ceil(box.x)));
  const int r0 = std::max(0, static_cast<int>(std::ceil(box.y)));
  const int c1 = std::min(instance.mask.width(), static_cast<int>(std::floor(box.x + box.w)));
  const int r1 = std::min(instance.mask.height(), static_cast<int>(std::floor(box.y + box.h)));
  std::vector<std::pair<int, int>> near;
  if (!field.single_label) {
    for (int r = r0; r < r1; ++r) {
      for (int c = c0; c < c1; ++c) {
        if (field.at(c, r) <= max_distance) near.emplace_back(c, r);
      }
    }
  }

  BiasedSample out;
  out.fell_back = near.empty() && beta > 0.0;
  const double effective_beta = near.empty() ? 0.0 : beta;
  out.points.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) {
    // The coin is only drawn for a proper mixture; beta in {0, 1} consumes
    // the same stream as the pure samplers.
    bool from_boundary = effective_beta >= 1.0;
    if (effective_beta > 0.0 && effective_beta < 1.0) from_boundary = rng.uniform() < effective_beta;
    if (from_boundary) {
      const auto [c, r] = near[rng.index(near.size())];
      out.points.push_back({half_open(c, 1.0, rng.uniform()), half_open(r, 1.0, rng.uniform())});
    } else {
      const double u = rng.uniform();
      const double v = rng.uniform();
      out.points.push_back({half_open(box.x, box.w, u), half_open(box.y, box.h, v)});
    }
  }
  return out;
}

BiasedSample sample_boundary_biased(const InstanceRecord& instance, int n, BoundaryBias bias,
                                    std::uint64_t seed, const BoundaryBiasConfig& cfg) {
  Rng rng = instance_stream(seed, instance.id);
  const double beta = bias == BoundaryBias::mild ? cfg.beta_mild : cfg.beta_heavy;
  return sample_boundary_mixture(instance, n, beta, cfg.max_distance, rng);
}

std::size_t noise_flip_count(double rate, std::size_t total) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error("noise rate must lie in [0, 1]");
  const double raw = rate * static_cast<double>(total);
  const auto k = static_cast<std::size_t>(std::floor(raw + 1e-9 * std::max(1.0, raw)));
  return std::min(k, total);
}

PointAnnotationFile inject_label_noise(const PointAnnotationFile& file, const Dataset& dataset,
                                       NoiseConfig noise, std::uint64_t seed) {
  PointAnnotationFile out = file;
  out.meta.noise_mode = noise.mode;
  out.meta.noise_rate = noise.rate;
  if (noise.mode == NoiseMode::none) return out;

  struct Slot {
    std::size_t annotation;
    std::size_t point;
  };
  std::vector<Slot> slots;
  for (std::size_t a = 0; a < out.annotations.size(); ++a) {
    for (std::size_t p = 0; p < out.annotations[a].points.size(); ++p) slots.push_back({a, p});
  }
  const std::size_t k = noise_flip_count(noise.rate, slots.size());

  std::vector<Slot> chosen;
  if (noise.mode == NoiseMode::random) {
    Rng rng = Rng::stream(seed, kNoiseStreamKey);
    // Partial Fisher-Yates over the dataset-wide point list.
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.index(slots.size() - i);
      std::swap(slots[i], slots[j]);
    }
    chosen.assign(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(k));
  } else {
    struct Ranked {
      double distance;
      std::int64_t instance_id;
      std::size_t point;
      Slot slot;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(slots.size());
    std::int64_t cached_id = 0;
    const InstanceRecord* cached = nullptr;
    DistanceField field;
    for (const auto& s : slots) {
      const auto& ann = out.annotations[s.annotation];
      if (cached == nullptr || cached_id != ann.instance_id) {
        cached = dataset.find_instance(ann.instance_id);
        if (cached == nullptr) {
          throw Error("inject_label_noise: unknown instance " + std::to_string(ann.instance_id));
        }
        cached_id = ann.instance_id;
        field = boundary_distance(cached->mask);
      }
      const auto& pt = ann.points[s.point];
      const int c = std::clamp(static_cast<int>(std::floor(pt.x)), 0, field.width - 1);
      const int r = std::clamp(static_cast<int>(std::floor(pt.y)), 0, field.height - 1);
      ranked.push_back({field.at(c, r), ann.instance_id, s.point, s});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
      return std::tie(a.distance, a.instance_id, a.point) <
             std::tie(b.distance, b.instance_id, b.point);
    });
    for (std::size_t i = 0; i < k; ++i) chosen.push_back(ranked[i].slot);
  }

  for (const auto& s : chosen) {
    auto& pt = out.annotations[s.annotation].points[s.point];
    pt.label = flip(pt.label);
    out.meta.flipped.push_back({out.annotations[s.annotation].instance_id, s.point});
  }
  std::sort(out.meta.flipped.begin(), out.meta.flipped.end(),
            [](const FlipRecord& a, const FlipRecord& b) {
              return std::tie(a.instance_id, a.point_index) < std::tie(b.instance_id, b.point_index);
            });
  return out;
}

SimulationResult simulate_dataset(const Dataset& dataset, int n_points, std::uint64_t seed,
                                  NoiseConfig noise) {
  if (n_points < 0) throw Error("simulate_dataset: negative point count");
  SimulationResult result;
  result.file.meta.n_points = n_points;
  result.file.meta.seed = seed;
  result.file.meta.dataset_id = dataset.id;
  for (const auto& inst : dataset.instances) {
    if (inst.mask.count() == 0) {
      result.skipped.push_back(inst.id);
      continue;
    }
    InstanceRecord derived = inst;
    derived.bbox = bbox_from_mask(inst.mask);
    derived.bbox_from_mask = true;
    Rng rng = instance_stream(seed, inst.id);
    PointAnnotation ann{inst.id, label_points(sample_uniform_points(derived.bbox, n_points, rng), derived)};
    result.file.annotations.push_back(std::move(ann));
  }
  result.file = inject_label_noise(result.file, dataset, noise, seed);
  return result;
}

std::optional<double> agreement(const PointAnnotation& annotation, const InstanceRecord& instance) {
  if (annotation.points.empty()) return std::nullopt;
  std::size_t match = 0;
  for (const auto& p : annotation.points) {
    if (!inside_image(instance.mask, {p.x, p.y})) throw Error("agreement: point outside image");
    if (label_at(instance, {p.x, p.y}) == p.label) ++match;
  }
  return static_cast<double>(match) / static_cast<double>(annotation.points.size());
}

std::optional<double> dataset_agreement(const PointAnnotationFile& file, const Dataset& dataset) {
  std::size_t match = 0, total = 0;
  for (const auto& ann : file.annotations) {
    const InstanceRecord* inst = dataset.find_instance(ann.instance_id);
    if (inst == nullptr) throw Error("agreement: unknown instance " + std::to_string(ann.instance_id));
    for (const auto& p : ann.points) {
      if (!inside_image(inst->mask, {p.x, p.y})) throw Error("agreement: point outside image");
      match += label_at(*inst, {p.x, p.y}) == p.label ? 1 : 0;
      ++total;
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(match) / static_cast<double>(total);
}

}  // namespace pointsup
