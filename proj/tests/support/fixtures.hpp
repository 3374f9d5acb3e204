#pragma once

#include "pointsup/dataset.hpp"
#include "pointsup/mask.hpp"

namespace fixture {

// Two 40x30 images with one rectangle and one triangle.
inline pointsup::Dataset two_image_dataset(const std::string& id = "fixture") {
  using namespace pointsup;
  Dataset ds;
  ds.id = id;
  ds.images = {{1, "a.png", 40, 30}, {2, "b.png", 40, 30}};
  InstanceRecord rect;
  rect.id = 10;
  rect.image_id = 1;
  rect.category = "box";
  rect.mask = rasterize_polygon({{{5, 4}, {25, 4}, {25, 20}, {5, 20}}}, 40, 30).mask;
  rect.bbox = bbox_from_mask(rect.mask);
  InstanceRecord tri;
  tri.id = 11;
  tri.image_id = 2;
  tri.category = "wedge";
  tri.mask = rasterize_polygon({{{10, 2}, {38, 27}, {3, 25}}}, 40, 30).mask;
  tri.bbox = bbox_from_mask(tri.mask);
  ds.instances = {rect, tri};
  return ds;
}

}  // namespace fixture
