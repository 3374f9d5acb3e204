#include "pointsup/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace pointsup {
namespace {

using nlohmann::json;

Bitmask decode_segmentation(const json& seg, const ImageInfo& image) {
  if (seg.contains("polygons")) {
    std::vector<Ring> rings;
    for (const auto& flat : seg.at("polygons")) {
      rings.push_back(ring_from_flat(flat.get<std::vector<double>>()));
    }
    return rasterize_polygon(rings, image.width, image.height).mask;
  }
  if (seg.contains("rle")) {
    const auto& r = seg.at("rle");
    const auto size = r.at("size").get<std::vector<int>>();
    if (size.size() != 2) throw Error("rle size must be [h, w]");
    Rle rle{size[0], size[1], r.at("counts").get<std::vector<std::uint32_t>>()};
    if (rle.height != image.height || rle.width != image.width) {
      throw Error("rle size does not match image " + std::to_string(image.id));
    }
    return rle_decode(rle);
  }
  throw Error("segmentation needs \"polygons\" or \"rle\"");
}

}  // namespace

const ImageInfo* Dataset::find_image(std::int64_t image_id) const {
  for (const auto& img : images) {
    if (img.id == image_id) return &img;
  }
  return nullptr;
}

const InstanceRecord* Dataset::find_instance(std::int64_t instance_id) const {
  for (const auto& inst : instances) {
    if (inst.id == instance_id) return &inst;
  }
  return nullptr;
}

void Dataset::validate() const {
  for (const auto& inst : instances) {
    const auto* img = find_image(inst.image_id);
    if (img == nullptr) {
      throw Error("instance " + std::to_string(inst.id) + " references unknown image " +
                  std::to_string(inst.image_id));
    }
    if (inst.mask.width() != img->width || inst.mask.height() != img->height) {
      throw Error("instance " + std::to_string(inst.id) + " mask does not match image size");
    }
  }
}

Dataset parse_dataset(const std::string& json_text, const std::string& fallback_id) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("dataset JSON: ") + e.what());
  }
  Dataset ds;
  ds.id = doc.value("id", fallback_id);
  try {
    std::unordered_map<std::int64_t, std::size_t> by_id;
    for (const auto& j : doc.at("images")) {
      ImageInfo img{j.at("id").get<std::int64_t>(), j.at("file_name").get<std::string>(),
                    j.at("width").get<int>(), j.at("height").get<int>()};
      by_id[img.id] = ds.images.size();
      ds.images.push_back(std::move(img));
    }
    for (const auto& j : doc.at("instances")) {
      InstanceRecord inst;
      inst.id = j.at("id").get<std::int64_t>();
      inst.image_id = j.at("image_id").get<std::int64_t>();
      inst.category = j.value("category", std::string{});
      const auto it = by_id.find(inst.image_id);
      if (it == by_id.end()) {
        throw Error("instance " + std::to_string(inst.id) + " references unknown image " +
                    std::to_string(inst.image_id));
      }
      inst.mask = decode_segmentation(j.at("segmentation"), ds.images[it->second]);
      if (j.contains("bbox") && !j.at("bbox").is_null()) {
        const auto b = j.at("bbox").get<std::vector<double>>();
        if (b.size() != 4) throw Error("bbox must be [x, y, w, h]");
        inst.bbox = {b[0], b[1], b[2], b[3]};
      } else if (inst.mask.count() > 0) {
        inst.bbox = bbox_from_mask(inst.mask);
        inst.bbox_from_mask = true;
      }
      ds.instances.push_back(std::move(inst));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("dataset JSON: ") + e.what());
  }
  ds.validate();
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), path.stem().string());
}

std::string dataset_to_json(const Dataset& dataset) {
  json doc;
  doc["id"] = dataset.id;
  doc["images"] = json::array();
  for (const auto& img : dataset.images) {
    doc["images"].push_back(
        {{"id", img.id}, {"file_name", img.file_name}, {"width", img.width}, {"height", img.height}});
  }
  doc["instances"] = json::array();
  for (const auto& inst : dataset.instances) {
    const Rle rle = rle_encode(inst.mask);
    json j{{"id", inst.id},
           {"image_id", inst.image_id},
           {"category", inst.category},
           {"segmentation", {{"rle", {{"counts", rle.counts}, {"size", {rle.height, rle.width}}}}}}};
    if (!inst.bbox_from_mask) j["bbox"] = {inst.bbox.x, inst.bbox.y, inst.bbox.w, inst.bbox.h};
    doc["instances"].push_back(std::move(j));
  }
  return doc.dump();
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset " + path.string());
  out << dataset_to_json(dataset) << '\n';
}

}  // namespace pointsup
