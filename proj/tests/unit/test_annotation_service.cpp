#include <doctest.h>

#include <fstream>
#include <thread>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pointsup/annotation_service.hpp"

using namespace pointsup;

namespace {

bool inside(const BoundingBox& inner, const BoundingBox& outer) {
  return inner.x >= outer.x - 1e-12 && inner.y >= outer.y - 1e-12 && inner.x + inner.w <= outer.x + outer.w + 1e-12 &&
         inner.y + inner.h <= outer.y + outer.h + 1e-12;
}

PointLabel truth(const Dataset& ds, const Task& t) {
  return ds.find_instance(t.instance_id)->mask.at_point(t.point) ? PointLabel::object : PointLabel::background;
}

}  // namespace

TEST_CASE("view geometry: context, zoom, highlight") {
  const BoundingBox box{100, 50, 200, 100};
  const auto g = view_geometry(box, {150, 80}, 640, 480);
  CHECK(g.context_view == BoundingBox{60, 30, 280, 140});
  const double side = std::max(64.0, 0.1 * std::hypot(200.0, 100.0));
  CHECK(g.zoom_view.w == doctest::Approx(side));
  CHECK(g.zoom_view.x + side / 2 == doctest::Approx(150));
  CHECK(g.magnification == 4.0);
  CHECK(g.marker == Vec2{150, 80});
  CHECK(g.highlight_box == BoundingBox{138, 68, 24, 24});

  // Near a corner the windows stay inside the image and keep the point.
  const BoundingBox corner{0, 0, 30, 20};
  const auto c = view_geometry(corner, {1, 2}, 100, 80);
  const BoundingBox image{0, 0, 100, 80};
  CHECK(inside(c.context_view, image));
  CHECK(inside(c.zoom_view, image));
  CHECK(c.zoom_view.w == 64.0);
  CHECK(c.zoom_view.contains({1, 2}));
  CHECK(inside(c.highlight_box, image));

  const auto big = view_geometry(BoundingBox{0, 0, 900, 900}, {450, 450}, 1000, 1000);
  CHECK(big.zoom_view.w == doctest::Approx(0.1 * std::hypot(900.0, 900.0)));

  // Image smaller than the zoom window.
  const auto small = view_geometry(BoundingBox{2, 2, 10, 10}, {5, 5}, 32, 24);
  CHECK(small.zoom_view == BoundingBox{0, 0, 32, 24});
}

TEST_CASE("sessions enumerate instance x point tasks deterministically") {
  oracle::TempDir dir("svc-enum");
  const auto ds = fixture::two_image_dataset();
  AnnotationService svc(dir.path);
  svc.add_dataset(ds);
  CHECK(svc.default_dataset() == "fixture");
  CHECK_THROWS_AS(svc.add_dataset(ds), Error);
  const auto a = svc.create_session("fixture", 3, 7);
  const auto b = svc.create_session("fixture", 3, 7);
  CHECK(a != b);
  const auto ta = svc.next_task(a);
  REQUIRE(ta);
  CHECK(ta->task_id == 0);
  CHECK(ta->instance_id == 10);
  CHECK(ta->file_name == "a.png");
  CHECK(ta->category == "box");
  CHECK(svc.next_task(b)->point == ta->point);
  CHECK(svc.next_task(a)->task_id == 0);

  // Same points as the offline simulator.
  const auto sim = simulate_dataset(ds, 3, 7);
  std::size_t id = 0;
  for (const auto& ann : sim.file.annotations) {
    for (const auto& p : ann.points) {
      const auto t = svc.next_task(a);
      REQUIRE(t);
      CHECK(t->task_id == id);
      CHECK(t->point == Vec2{p.x, p.y});
      CHECK(t->instance_id == ann.instance_id);
      CHECK(svc.submit_label(a, id, p.label, 500).status == SubmitStatus::accepted);
      ++id;
    }
  }
  CHECK(id == 6);
  CHECK_FALSE(svc.next_task(a));
  const auto st = svc.session_stats(a);
  CHECK(st.labeled == 6);
  CHECK(st.total == 6);
  CHECK(*st.mean_s_per_point == doctest::Approx(0.5));
  CHECK(*st.agreement == 1.0);
  const auto exported = svc.export_annotations(a);
  CHECK(exported.annotations.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(exported.annotations[i].points[k].x == sim.file.annotations[i].points[k].x);
      CHECK(exported.annotations[i].points[k].label == sim.file.annotations[i].points[k].label);
      CHECK(exported.annotations[i].points[k].source == PointSource::human);
    }
  }
}

TEST_CASE("submission ordering, retries and conflicts") {
  oracle::TempDir dir("svc-order");
  AnnotationService svc(dir.path);
  svc.add_dataset(fixture::two_image_dataset());
  const auto s = svc.create_session("fixture", 3, 1);

  auto st = svc.session_stats(s);
  CHECK(st.labeled == 0);
  CHECK_FALSE(st.mean_s_per_point.has_value());
  CHECK_FALSE(st.agreement.has_value());

  auto r = svc.submit_label(s, 2, PointLabel::object, 100);
  CHECK(r.status == SubmitStatus::out_of_order);
  CHECK(r.cursor == 0);
  r = svc.submit_label(s, 0, PointLabel::object, 100);
  CHECK(r.status == SubmitStatus::accepted);
  CHECK(r.labeled == 1);
  CHECK(r.cursor == 1);
  r = svc.submit_label(s, 0, PointLabel::object, 100);
  CHECK(r.status == SubmitStatus::duplicate);
  CHECK(svc.session_stats(s).labeled == 1);
  r = svc.submit_label(s, 0, PointLabel::background, 100);
  CHECK(r.status == SubmitStatus::conflict);
  CHECK(svc.export_annotations(s).annotations[0].points[0].label == PointLabel::object);
  CHECK_THROWS(svc.submit_label(s, 1, PointLabel::object, -5));
  CHECK_THROWS_AS(svc.next_task("nope"), UnknownSession);
  CHECK_THROWS_AS(svc.next_task("../etc"), UnknownSession);
  CHECK_THROWS_AS(svc.create_session("missing", 3, 0), UnknownDataset);
  CHECK_THROWS(svc.create_session("fixture", -1, 0));
}

TEST_CASE("agreement reflects flipped labels") {
  oracle::TempDir dir("svc-agree");
  const auto ds = fixture::two_image_dataset();
  AnnotationService svc(dir.path);
  svc.add_dataset(ds);
  const auto s = svc.create_session("fixture", 10, 3);
  std::size_t n = 0;
  while (const auto t = svc.next_task(s)) {
    PointLabel l = truth(ds, *t);
    if (t->task_id % 4 == 0) l = l == PointLabel::object ? PointLabel::background : PointLabel::object;
    svc.submit_label(s, t->task_id, l, 800);
    ++n;
  }
  CHECK(n == 20);
  CHECK(*svc.session_stats(s).agreement == doctest::Approx(15.0 / 20.0));
}

TEST_CASE("a new service instance resumes sessions from disk") {
  oracle::TempDir dir("svc-restart");
  const auto ds = fixture::two_image_dataset();
  std::string s;
  {
    AnnotationService svc(dir.path);
    svc.add_dataset(ds);
    s = svc.create_session("fixture", 3, 4);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto t = svc.next_task(s);
      svc.submit_label(s, t->task_id, truth(ds, *t), 250);
    }
  }
  AnnotationService svc(dir.path);
  svc.add_dataset(ds);
  const auto st = svc.session_stats(s);
  CHECK(st.labeled == 4);
  CHECK(*st.mean_s_per_point == doctest::Approx(0.25));
  CHECK(svc.next_task(s)->task_id == 4);
  CHECK(svc.session_info(s).seed == 4);
  const auto t = svc.next_task(s);
  CHECK(svc.submit_label(s, t->task_id, truth(ds, *t), 1).status == SubmitStatus::accepted);
  CHECK(svc.session_stats(s).labeled == 5);
}

TEST_CASE("a torn final log line is ignored on replay") {
  oracle::TempDir dir("svc-torn");
  const auto ds = fixture::two_image_dataset();
  std::string s;
  {
    AnnotationService svc(dir.path);
    svc.add_dataset(ds);
    s = svc.create_session("fixture", 3, 4);
    for (std::size_t i = 0; i < 2; ++i) svc.submit_label(s, i, PointLabel::object, 10);
  }
  {
    std::ofstream log(dir.path / (s + ".events.jsonl"), std::ios::app);
    log << "{\"session_id\":\"" << s << "\",\"task_id\":2,\"lab";
  }
  AnnotationService svc(dir.path);
  svc.add_dataset(ds);
  CHECK(svc.session_stats(s).labeled == 2);
  CHECK(svc.next_task(s)->task_id == 2);
}

TEST_CASE("concurrent submissions to separate sessions") {
  oracle::TempDir dir("svc-threads");
  const auto ds = fixture::two_image_dataset();
  AnnotationService svc(dir.path);
  svc.add_dataset(ds);
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(svc.create_session("fixture", 5, i));
  std::vector<std::thread> workers;
  for (const auto& id : ids) {
    workers.emplace_back([&svc, &ds, id] {
      while (const auto t = svc.next_task(id)) svc.submit_label(id, t->task_id, truth(ds, *t), 5);
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& id : ids) {
    CHECK(svc.session_stats(id).labeled == 10);
    CHECK(*svc.session_stats(id).agreement == 1.0);
  }
}

TEST_CASE("default data dir honors the environment") {
  ::setenv("POINTSUP_DATA_DIR", "/tmp/pointsup-env-check", 1);
  CHECK(default_data_dir() == std::filesystem::path("/tmp/pointsup-env-check"));
  ::unsetenv("POINTSUP_DATA_DIR");
  CHECK(default_data_dir().filename() == "pointsup-data");
}
