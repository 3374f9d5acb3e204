#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pointsup/geometry.hpp"
#include "pointsup/mask.hpp"

namespace pointsup {

struct ImageInfo {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

struct InstanceRecord {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::string category;
  BoundingBox bbox;
  Bitmask mask;  ///< image-aligned
  /// True when bbox was derived from the mask rather than read from file.
  bool bbox_from_mask = false;
};

struct Dataset {
  std::string id;
  std::vector<ImageInfo> images;
  std::vector<InstanceRecord> instances;

  const ImageInfo* find_image(std::int64_t image_id) const;
  const InstanceRecord* find_instance(std::int64_t instance_id) const;

  /// Throws when an instance references a missing image or its mask does
  /// not match the image size.
  void validate() const;
};

/// Parse dataset JSON. Polygon segmentations are rasterized to the image
/// size; a missing "bbox" is derived from the mask. `fallback_id` names the
/// dataset when the file carries no "id".
Dataset parse_dataset(const std::string& json_text, const std::string& fallback_id = "dataset");
Dataset load_dataset(const std::filesystem::path& path);

/// Serialize with RLE segmentations.
std::string dataset_to_json(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace pointsup
