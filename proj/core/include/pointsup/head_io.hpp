#pragma once

#include <filesystem>
#include <string>

#include "pointsup/geometry.hpp"
#include "pointsup/implicit_head.hpp"

namespace pointsup {

/// Everything needed to evaluate one trained point head: parameters with
/// their architecture header, the coordinate encoder, and the instance box
/// in feature-grid pixel coordinates.
struct HeadSnapshot {
  PointHeadParams params;
  CoordEncoder encoder;
  BoundingBox box;
};

/// Binary layout (little-endian): magic "PSHEAD01", u32 feature_dim,
/// u32 pe_dim, u32 hidden[3], u8 coord mode, u32 m, f64 sigma, u64 seed,
/// f64 freq[2m], f64 box[4], u64 n, f64 params[n].
void save_head_binary(const HeadSnapshot& head, const std::filesystem::path& path);
HeadSnapshot load_head_binary(const std::filesystem::path& path);

std::string head_to_json(const HeadSnapshot& head);
HeadSnapshot head_from_json(const std::string& text);

/// Chooses the format by extension: ".json" or binary otherwise.
void save_head(const HeadSnapshot& head, const std::filesystem::path& path);
HeadSnapshot load_head(const std::filesystem::path& path);

/// Binary layout: magic "PSFEAT01", u32 channels, u32 height, u32 width,
/// f64 data[c*h*w].
void save_features(const FeatureGrid& grid, const std::filesystem::path& path);
FeatureGrid load_features(const std::filesystem::path& path);

}  // namespace pointsup
