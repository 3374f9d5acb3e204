#include "pointsup/annotation_service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace pointsup {
namespace {

using nlohmann::json;

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

double place_window(double center, double side, double extent) {
  if (side >= extent) return 0.0;
  return std::clamp(center - 0.5 * side, 0.0, extent - side);
}

bool valid_session_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

// Append one line and fsync before returning.
void append_durable(const std::filesystem::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot open session log " + path.string());
  const std::string data = line + "\n";
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      ::close(fd);
      throw Error("cannot append to session log " + path.string());
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

void write_durable(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << text << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

struct AnnotationService::DatasetEntry {
  Dataset dataset;
  std::filesystem::path image_root;
};

struct AnnotationService::Session {
  SessionInfo info;
  std::shared_ptr<const DatasetEntry> dataset;
  std::vector<Task> tasks;
  std::vector<LabelEvent> events;  ///< events[i] labels task i
  std::filesystem::path log_path;
  std::mutex mutex;
};

ViewGeometry view_geometry(const BoundingBox& bbox, Vec2 point, int image_width, int image_height,
                           const ViewConfig& cfg) {
  const double W = image_width;
  const double H = image_height;
  ViewGeometry g;
  g.magnification = cfg.magnification;
  g.marker = point;
  const double mx = cfg.context_margin * bbox.w;
  const double my = cfg.context_margin * bbox.h;
  g.context_view = BoundingBox{bbox.x - mx, bbox.y - my, bbox.w + 2 * mx, bbox.h + 2 * my}.clamped(W, H);

  const double side = std::max(cfg.zoom_min_side, cfg.zoom_diag_fraction * bbox.diagonal());
  g.zoom_view = BoundingBox{place_window(point.x, side, W), place_window(point.y, side, H), side, side}.clamped(W, H);

  const double hs = cfg.highlight_side;
  g.highlight_box = BoundingBox{point.x - 0.5 * hs, point.y - 0.5 * hs, hs, hs}.clamped(W, H);
  return g;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("POINTSUP_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return std::filesystem::current_path() / "pointsup-data";
}

AnnotationService::AnnotationService(std::filesystem::path data_dir, ViewConfig views)
    : data_dir_(std::move(data_dir)), views_(views) {
  std::filesystem::create_directories(data_dir_);
}

AnnotationService::~AnnotationService() = default;

void AnnotationService::add_dataset(Dataset dataset, std::filesystem::path image_root) {
  dataset.validate();
  std::unique_lock lock(mutex_);
  for (const auto& d : datasets_) {
    if (d->dataset.id == dataset.id) throw Error("dataset '" + dataset.id + "' already registered");
  }
  datasets_.push_back(std::make_shared<DatasetEntry>(DatasetEntry{std::move(dataset), std::move(image_root)}));
}

bool AnnotationService::has_dataset(const std::string& dataset_id) const {
  std::shared_lock lock(mutex_);
  return std::any_of(datasets_.begin(), datasets_.end(),
                     [&](const auto& d) { return d->dataset.id == dataset_id; });
}

std::string AnnotationService::default_dataset() const {
  std::shared_lock lock(mutex_);
  return datasets_.empty() ? std::string{} : datasets_.front()->dataset.id;
}

std::filesystem::path AnnotationService::image_root(const std::string& dataset_id) const {
  std::shared_lock lock(mutex_);
  for (const auto& d : datasets_) {
    if (d->dataset.id == dataset_id) return d->image_root;
  }
  throw UnknownDataset("unknown dataset '" + dataset_id + "'");
}

std::shared_ptr<AnnotationService::Session> AnnotationService::build(SessionInfo info) {
  std::shared_ptr<const DatasetEntry> entry;
  {
    std::shared_lock lock(mutex_);
    for (const auto& d : datasets_) {
      if (d->dataset.id == info.dataset_id) entry = d;
    }
  }
  if (!entry) throw UnknownDataset("unknown dataset '" + info.dataset_id + "'");

  auto session = std::make_shared<Session>();
  session->info = std::move(info);
  session->dataset = entry;
  session->log_path = data_dir_ / (session->info.session_id + ".events.jsonl");
  // Same sampler, seed and order as the offline simulator.
  const auto sim = simulate_dataset(entry->dataset, session->info.n_points, session->info.seed);
  std::size_t task_id = 0;
  for (const auto& ann : sim.file.annotations) {
    const InstanceRecord* inst = entry->dataset.find_instance(ann.instance_id);
    const ImageInfo* img = entry->dataset.find_image(inst->image_id);
    const BoundingBox box = bbox_from_mask(inst->mask);
    for (std::size_t p = 0; p < ann.points.size(); ++p) {
      Task t;
      t.task_id = task_id++;
      t.instance_id = inst->id;
      t.point_index = p;
      t.image_id = img->id;
      t.file_name = img->file_name;
      t.category = inst->category;
      t.bbox = box;
      t.point = {ann.points[p].x, ann.points[p].y};
      t.view = view_geometry(box, t.point, img->width, img->height, views_);
      session->tasks.push_back(std::move(t));
    }
  }
  return session;
}

std::string AnnotationService::create_session(const std::string& dataset_id, int n_points, std::uint64_t seed) {
  if (n_points < 0) throw Error("n_points must be >= 0");
  if (!has_dataset(dataset_id)) throw UnknownDataset("unknown dataset '" + dataset_id + "'");
  std::random_device rd;
  std::string id;
  do {
    std::ostringstream ss;
    ss << std::hex << ((std::uint64_t(rd()) << 32) | rd());
    id = ss.str();
  } while (std::filesystem::exists(data_dir_ / (id + ".session.json")));

  SessionInfo info{id, dataset_id, n_points, seed, now_ms()};
  auto session = build(info);
  const json header{{"session_id", info.session_id},
                    {"dataset_id", info.dataset_id},
                    {"n_points", info.n_points},
                    {"seed", info.seed},
                    {"created_at", info.created_at_ms}};
  write_durable(data_dir_ / (id + ".session.json"), header.dump());
  std::unique_lock lock(mutex_);
  sessions_[id] = std::move(session);
  return id;
}

std::shared_ptr<AnnotationService::Session> AnnotationService::restore(const std::string& session_id) {
  const auto header_path = data_dir_ / (session_id + ".session.json");
  std::ifstream in(header_path);
  if (!in) throw UnknownSession("unknown session '" + session_id + "'");
  SessionInfo info;
  try {
    const json h = json::parse(in);
    info.session_id = h.at("session_id").get<std::string>();
    info.dataset_id = h.at("dataset_id").get<std::string>();
    info.n_points = h.at("n_points").get<int>();
    info.seed = h.at("seed").get<std::uint64_t>();
    info.created_at_ms = h.at("created_at").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw Error("corrupt session header " + header_path.string() + ": " + e.what());
  }
  auto session = build(std::move(info));

  std::ifstream log(session->log_path);
  std::string line;
  while (std::getline(log, line)) {
    if (line.empty()) continue;
    json e;
    try {
      e = json::parse(line);
    } catch (const json::exception&) {
      break;  // torn final line from a crash; everything before it is intact
    }
    LabelEvent ev{e.at("task_id").get<std::size_t>(), static_cast<PointLabel>(e.at("label").get<int>()),
                  e.at("elapsed_ms").get<double>(), e.at("server_ts").get<std::int64_t>()};
    if (ev.task_id != session->events.size() || ev.task_id >= session->tasks.size()) {
      throw Error("session log " + session->log_path.string() + " is out of order");
    }
    session->events.push_back(ev);
  }
  return session;
}

std::shared_ptr<AnnotationService::Session> AnnotationService::find(const std::string& session_id) {
  if (!valid_session_id(session_id)) throw UnknownSession("unknown session '" + session_id + "'");
  {
    std::shared_lock lock(mutex_);
    if (auto it = sessions_.find(session_id); it != sessions_.end()) return it->second;
  }
  auto restored = restore(session_id);
  std::unique_lock lock(mutex_);
  auto [it, inserted] = sessions_.emplace(session_id, restored);
  return it->second;
}

SessionInfo AnnotationService::session_info(const std::string& session_id) {
  return find(session_id)->info;
}

std::optional<Task> AnnotationService::next_task(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (s->events.size() >= s->tasks.size()) return std::nullopt;
  return s->tasks[s->events.size()];
}

SubmitResult AnnotationService::submit_label(const std::string& session_id, std::size_t task_id,
                                             PointLabel label, double elapsed_ms) {
  if (!(elapsed_ms >= 0.0)) throw Error("elapsed_ms must be >= 0");
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  SubmitResult r;
  r.total = s->tasks.size();
  r.cursor = s->events.size();
  if (task_id < s->events.size()) {
    r.status = s->events[task_id].label == label ? SubmitStatus::duplicate : SubmitStatus::conflict;
    r.labeled = task_id + 1;
    return r;
  }
  if (task_id != s->events.size()) {
    r.status = SubmitStatus::out_of_order;
    r.labeled = s->events.size();
    return r;
  }
  const LabelEvent ev{task_id, label, elapsed_ms, now_ms()};
  const json line{{"session_id", s->info.session_id},
                  {"task_id", ev.task_id},
                  {"label", static_cast<int>(ev.label)},
                  {"elapsed_ms", ev.elapsed_ms},
                  {"server_ts", ev.server_ts_ms}};
  append_durable(s->log_path, line.dump());
  s->events.push_back(ev);
  r.status = SubmitStatus::accepted;
  r.labeled = s->events.size();
  r.cursor = s->events.size();
  return r;
}

PointAnnotationFile AnnotationService::export_locked(const Session& s) const {
  PointAnnotationFile file;
  file.meta.n_points = s.info.n_points;
  file.meta.seed = s.info.seed;
  file.meta.dataset_id = s.info.dataset_id;
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    const Task& t = s.tasks[i];
    if (file.annotations.empty() || file.annotations.back().instance_id != t.instance_id) {
      file.annotations.push_back({t.instance_id, {}});
    }
    if (i < s.events.size()) {
      file.annotations.back().points.push_back({t.point.x, t.point.y, s.events[i].label, PointSource::human});
    }
  }
  return file;
}

PointAnnotationFile AnnotationService::export_annotations(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return export_locked(*s);
}

SessionStats AnnotationService::session_stats(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  SessionStats st;
  st.labeled = s->events.size();
  st.total = s->tasks.size();
  if (!s->events.empty()) {
    double sum = 0.0;
    for (const auto& e : s->events) sum += e.elapsed_ms;
    st.mean_s_per_point = sum / static_cast<double>(s->events.size()) / 1000.0;
  }
  const auto& ds = s->dataset->dataset;
  const bool has_masks = std::all_of(ds.instances.begin(), ds.instances.end(),
                                     [](const InstanceRecord& r) { return r.mask.size() > 0; });
  if (has_masks) st.agreement = dataset_agreement(export_locked(*s), ds);
  return st;
}

}  // namespace pointsup
