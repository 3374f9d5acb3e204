#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "pointsup/annotation_sim.hpp"
#include "pointsup/dataset.hpp"

namespace pointsup {

class UnknownSession : public Error {
 public:
  using Error::Error;
};

class UnknownDataset : public Error {
 public:
  using Error::Error;
};

/// Constants for the two views shown per point.
struct ViewConfig {
  double context_margin = 0.2;     ///< fraction of box size added per side
  double zoom_min_side = 64.0;     ///< pixels
  double zoom_diag_fraction = 0.1; ///< zoom side >= this times the box diagonal
  double magnification = 4.0;
  double highlight_side = 24.0;    ///< green box around the marker, pixels
};

struct ViewGeometry {
  BoundingBox context_view;  ///< whole object with margins, clamped to the image
  BoundingBox zoom_view;     ///< square window around the point, inside the image
  double magnification = 4.0;
  Vec2 marker;
  BoundingBox highlight_box;
};

ViewGeometry view_geometry(const BoundingBox& bbox, Vec2 point, int image_width, int image_height,
                           const ViewConfig& cfg = {});

struct Task {
  std::size_t task_id = 0;
  std::int64_t instance_id = 0;
  std::size_t point_index = 0;
  std::int64_t image_id = 0;
  std::string file_name;
  std::string category;
  BoundingBox bbox;
  Vec2 point;
  ViewGeometry view;
};

struct SessionInfo {
  std::string session_id;
  std::string dataset_id;
  int n_points = 0;
  std::uint64_t seed = 0;
  std::int64_t created_at_ms = 0;
};

struct LabelEvent {
  std::size_t task_id = 0;
  PointLabel label = PointLabel::background;
  double elapsed_ms = 0.0;
  std::int64_t server_ts_ms = 0;
};

enum class SubmitStatus : std::uint8_t {
  accepted,
  duplicate,     ///< identical retry of an already logged label
  out_of_order,  ///< task_id is not the current cursor
  conflict,      ///< task already labeled differently
};

struct SubmitResult {
  SubmitStatus status = SubmitStatus::accepted;
  std::size_t labeled = 0;  ///< progress reported with the ack
  std::size_t total = 0;
  std::size_t cursor = 0;   ///< next unlabeled task
};

struct SessionStats {
  std::size_t labeled = 0;
  std::size_t total = 0;
  std::optional<double> mean_s_per_point;
  std::optional<double> agreement;
};

/// Point-labeling sessions over registered datasets.
///
/// Each session is a header file plus an append-only JSONL event log in
/// the data directory. An event is flushed to disk before it is
/// acknowledged, and a session not in memory is rebuilt by replaying its
/// log, so a restarted service resumes every session exactly.
class AnnotationService {
 public:
  explicit AnnotationService(std::filesystem::path data_dir, ViewConfig views = {});
  ~AnnotationService();

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  void add_dataset(Dataset dataset, std::filesystem::path image_root = {});
  bool has_dataset(const std::string& dataset_id) const;
  /// Id of the first registered dataset; empty when none.
  std::string default_dataset() const;
  std::filesystem::path image_root(const std::string& dataset_id) const;

  std::string create_session(const std::string& dataset_id, int n_points, std::uint64_t seed);
  SessionInfo session_info(const std::string& session_id);

  /// Current task without advancing; nullopt once every task is labeled.
  std::optional<Task> next_task(const std::string& session_id);
  SubmitResult submit_label(const std::string& session_id, std::size_t task_id, PointLabel label,
                            double elapsed_ms);
  SessionStats session_stats(const std::string& session_id);
  /// Labels so far in the point annotation schema.
  PointAnnotationFile export_annotations(const std::string& session_id);

  const std::filesystem::path& data_dir() const noexcept { return data_dir_; }

 private:
  struct Session;
  struct DatasetEntry;

  std::shared_ptr<Session> find(const std::string& session_id);
  std::shared_ptr<Session> restore(const std::string& session_id);
  std::shared_ptr<Session> build(SessionInfo info);
  PointAnnotationFile export_locked(const Session& session) const;

  std::filesystem::path data_dir_;
  ViewConfig views_;
  mutable std::shared_mutex mutex_;
  std::vector<std::shared_ptr<DatasetEntry>> datasets_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

/// Data directory from POINTSUP_DATA_DIR, else ./pointsup-data.
std::filesystem::path default_data_dir();

}  // namespace pointsup
