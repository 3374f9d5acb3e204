// pointsup command line: simulation, rendering, toy training, budget and
// the annotation service.

#include <algorithm>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pointsup/annotation_service.hpp"
#include "pointsup/annotation_sim.hpp"
#include "pointsup/budget.hpp"
#include "pointsup/dataset.hpp"
#include "pointsup/head_io.hpp"
#include "pointsup/http_server.hpp"
#include "pointsup/png_io.hpp"
#include "pointsup/subdivision.hpp"
#include "pointsup/toy_trainer.hpp"

namespace ps = pointsup;
using nlohmann::json;

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ps::Error("cannot write " + path);
  out << text;
}

// ---- simulate ------------------------------------------------------------

struct SimulateArgs {
  std::string dataset;
  int points = 10;
  std::uint64_t seed = 0;
  std::string noise = "none";
  double rate = 0.0;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  const auto ds = ps::load_dataset(a.dataset);
  ps::NoiseConfig noise{ps::noise_mode_from_string(a.noise), a.rate};
  if (noise.mode == ps::NoiseMode::none) noise.rate = 0.0;
  const auto result = ps::simulate_dataset(ds, a.points, a.seed, noise);
  for (auto id : result.skipped) std::cerr << "warning: instance " << id << " has an empty mask; skipped\n";
  if (a.out.empty() || a.out == "-")
    std::cout << ps::annotation_file_to_json(result.file) << '\n';
  else
    ps::save_annotation_file(result.file, a.out);
  std::cerr << result.file.annotations.size() << " instances, " << result.file.total_points() << " points, "
            << result.file.meta.flipped.size() << " flipped\n";
  return 0;
}

// ---- render --------------------------------------------------------------

struct RenderArgs {
  std::string params;
  std::string features;
  std::string out;
  std::string prob_out;
  int start = 28;
  int target = 224;
  std::size_t nsel = 784;
  bool logit = false;
  std::vector<double> box;
};

int run_render(const RenderArgs& a) {
  const auto head = ps::load_head(a.params);
  ps::SyntheticInstance inst;
  inst.features = ps::load_features(a.features);
  inst.bbox = head.box;
  if (!a.box.empty()) inst.bbox = {a.box[0], a.box[1], a.box[2], a.box[3]};
  if (!inst.bbox.valid()) throw ps::Error("render needs a non-degenerate box");
  if (head.params.arch.feature_dim != inst.features.channels)
    throw ps::Error("head expects " + std::to_string(head.params.arch.feature_dim) + " feature channels, file has " +
                    std::to_string(inst.features.channels));

  ps::RenderConfig cfg;
  cfg.start_res = a.start;
  cfg.target_res = a.target;
  cfg.n_select = a.nsel;
  cfg.space = a.logit ? ps::RenderSpace::logit : ps::RenderSpace::probability;

  auto prob_fn = ps::head_point_function(inst, head.params, head.encoder);
  ps::PointFunction fn = prob_fn;
  if (a.logit) {
    fn = [&](std::span<const ps::Vec2> uv, std::span<double> out) {
      prob_fn(uv, out);
      for (auto& v : out) {
        const double p = std::clamp(v, 1e-300, 1.0 - 1e-16);
        v = std::log(p) - std::log1p(-p);
      }
    };
  }
  const auto result = ps::render(fn, cfg);
  const auto mask = ps::threshold(result.grid, cfg.space);
  std::vector<std::uint8_t> pixels(mask.bits().size());
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = mask.bits()[i] ? 255 : 0;
  ps::write_png_gray(a.out, mask.width(), mask.height(), pixels);

  if (!a.prob_out.empty()) {
    std::ofstream out(a.prob_out, std::ios::binary);
    if (!out) throw ps::Error("cannot write " + a.prob_out);
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(result.grid.width),
                                   static_cast<std::uint32_t>(result.grid.height)};
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    out.write(reinterpret_cast<const char*>(result.grid.values.data()),
              static_cast<std::streamsize>(result.grid.values.size() * sizeof(double)));
  }
  std::cerr << "rendered " << cfg.target_res << "x" << cfg.target_res << " with " << result.eval_count
            << " point evaluations (dense: " << cfg.target_res * cfg.target_res << ")\n";
  return 0;
}

// ---- train-toy -----------------------------------------------------------

struct TrainArgs {
  std::uint64_t suite_seed = 0;
  int instances = 100;
  bool sweep = false;
  bool ablations = false;
  std::string out;
  std::vector<int> n_list{1, 2, 5, 10, 20, 50};
  int seeds = 5;
  int steps = -1;
  double lr = -1;
  std::string coords = "rel";
  bool augment = false;
  double feature_blur = 0.0;
  double ablation_blur = 3.0;
  int points = 10;
  unsigned threads = 0;
  std::string export_dir;
};

int run_train(const TrainArgs& a) {
  ps::SuiteConfig suite_cfg;
  suite_cfg.feature_blur = a.feature_blur;
  const auto suite = ps::generate_suite(a.instances, a.suite_seed, suite_cfg);
  ps::SweepOptions opt;
  opt.n_list = a.n_list;
  opt.seeds.clear();
  for (int s = 0; s < a.seeds; ++s) opt.seeds.push_back(static_cast<std::uint64_t>(s));
  opt.threads = a.threads;
  if (a.steps > 0) opt.base.steps = a.steps;
  if (a.lr > 0) opt.base.learning_rate = a.lr;
  opt.base.coords = ps::coord_mode_from_string(a.coords);
  opt.base.augment = a.augment;
  opt.base.n_points = a.points;

  std::vector<ps::ExperimentRow> rows;
  if (a.sweep) {
    auto r = ps::run_point_sweep(suite, opt);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (a.ablations) {
    // Coordinate and noise ablations share one pooled-linear head across
    // a suite with blurred features; augmentation is ablated per instance.
    ps::SuiteConfig blurred;
    blurred.feature_blur = a.ablation_blur;
    const auto ab_suite = ps::generate_suite(a.instances, a.suite_seed, blurred);
    auto shared = opt;
    shared.base.mode = ps::ParamHeadMode::pooled_linear;
    auto r = ps::run_ablations(ab_suite, shared);
    rows.insert(rows.end(), r.begin(), r.end());
    auto free = opt;
    free.base.mode = ps::ParamHeadMode::free;
    r = ps::run_augmentation_ablation(ab_suite, free);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (!rows.empty()) write_text(a.out, ps::rows_to_csv(rows));
  for (const auto& row : rows)
    std::cerr << row.name << ": mean_iou " << row.mean_iou << " std " << row.std_iou << '\n';

  if (!a.export_dir.empty()) {
    // One trained head plus its feature map, ready for `pointsup render`.
    const std::filesystem::path dir(a.export_dir);
    std::filesystem::create_directories(dir);
    const auto& inst = suite.front();
    const auto ds = ps::suite_dataset({inst});
    const auto sim = ps::simulate_dataset(ds, opt.base.n_points, 0);
    const auto targets = ps::point_targets(inst, sim.file.annotations.front());
    const auto outcome = ps::train_instance(inst, targets, opt.base);
    ps::save_head({outcome.params, outcome.encoder, inst.bbox}, dir / "head.bin");
    ps::save_features(inst.features, dir / "features.bin");
    std::cerr << "exported instance " << inst.id << " to " << dir << '\n';
  }
  if (rows.empty() && a.export_dir.empty()) std::cerr << "nothing to do: pass --sweep, --ablations or --export-dir\n";
  return 0;
}

// ---- budget --------------------------------------------------------------

struct BudgetArgs {
  std::int64_t instances = ps::kCocoTrainInstances;
  int points = 10;
  ps::BudgetParams params;
  bool break_even = false;
  double f_box = 1.0;
  double f_mask = 0.4;
  double f_point = 0.5;
  std::string format = "json";
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int run_budget(const BudgetArgs& a) {
  a.params.validate();
  const std::vector<ps::Supervision> kinds{ps::Supervision::box(), ps::Supervision::mask(),
                                           ps::Supervision::points(a.points)};
  json report;
  report["instances"] = a.instances;
  report["params"] = {{"t_category", a.params.t_category}, {"t_spotting", a.params.t_spotting},
                      {"t_box", a.params.t_box},           {"t_point", a.params.t_point},
                      {"t_mask", a.params.t_mask}};
  std::string csv = "supervision,seconds_per_instance,seconds_without_stages,dataset_days\n";
  for (const auto& k : kinds) {
    const double with = ps::per_instance_time(k, a.params, true);
    const double without = ps::per_instance_time(k, a.params, false);
    const double days = ps::dataset_time_days(k, a.instances, a.params);
    report["forms"].push_back({{"supervision", ps::to_string(k)},
                               {"seconds_per_instance", with},
                               {"seconds_without_stages", without},
                               {"dataset_days", days}});
    csv += ps::to_string(k) + "," + std::to_string(with) + "," + std::to_string(without) + "," +
           std::to_string(days) + "\n";
  }
  if (a.break_even) {
    const auto be = ps::break_even_interval(a.f_box, a.f_mask, a.f_point, a.params, a.points);
    report["break_even"] = {{"fractions", {{"box", a.f_box}, {"mask", a.f_mask}, {"point", a.f_point}}},
                            {"low", number_or_null(be.low)},
                            {"high", number_or_null(be.high)},
                            {"empty", be.empty},
                            {"degenerate", be.degenerate}};
    csv += "break_even_low,break_even_high,empty\n" + std::to_string(be.low) + "," +
           (std::isfinite(be.high) ? std::to_string(be.high) : std::string("inf")) + "," +
           (be.empty ? "true" : "false") + "\n";
  }
  std::cout << (a.format == "csv" ? csv : report.dump(2) + "\n");
  return 0;
}

// ---- serve ---------------------------------------------------------------

struct ServeArgs {
  std::string dataset;
  std::string root;
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string data_dir;
};

ps::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int run_serve(const ServeArgs& a) {
  const std::filesystem::path data_dir = a.data_dir.empty() ? ps::default_data_dir() : std::filesystem::path(a.data_dir);
  ps::AnnotationService service(data_dir);
  auto ds = ps::load_dataset(a.dataset);
  const std::string id = ds.id;
  service.add_dataset(std::move(ds), a.root);
  ps::HttpServer server(service);
  const int port = server.bind(a.host, a.port);
  if (port < 0) throw ps::Error("cannot bind " + a.host + ":" + std::to_string(a.port));
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "serving dataset " << id << " on " << a.host << ":" << port << " (data dir " << data_dir.string()
            << ")" << std::endl;
  server.listen_after_bind();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pointsup: point-supervision toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate point annotations for a dataset");
  s->add_option("--dataset", sim.dataset, "Dataset JSON")->required()->check(CLI::ExistingFile);
  s->add_option("--points", sim.points, "Points per instance")->check(CLI::NonNegativeNumber);
  s->add_option("--seed", sim.seed, "Sampling seed");
  s->add_option("--noise", sim.noise, "Label noise mode")->check(CLI::IsMember({"none", "random", "boundary"}));
  s->add_option("--rate", sim.rate, "Fraction of labels to flip")->check(CLI::Range(0.0, 1.0));
  s->add_option("--out", sim.out, "Output JSON (stdout when omitted)");

  RenderArgs ren;
  auto* r = app.add_subcommand("render", "Render a point head to a mask by subdivision");
  r->add_option("--params", ren.params, "Head file (.bin or .json)")->required()->check(CLI::ExistingFile);
  r->add_option("--features", ren.features, "Feature map file")->required()->check(CLI::ExistingFile);
  r->add_option("--out", ren.out, "Output PNG")->required();
  r->add_option("--start", ren.start, "Starting resolution");
  r->add_option("--target", ren.target, "Target resolution");
  r->add_option("--nsel", ren.nsel, "Cells re-evaluated per step");
  r->add_flag("--logit", ren.logit, "Interpolate and rank in logit space");
  r->add_option("--box", ren.box, "Override the box: x y w h")->expected(4);
  r->add_option("--prob-out", ren.prob_out, "Raw dump: u32 width, u32 height, f64 values");

  TrainArgs tr;
  auto* t = app.add_subcommand("train-toy", "Fit point heads on the synthetic suite");
  t->add_option("--suite-seed", tr.suite_seed, "Suite seed");
  t->add_option("--instances", tr.instances, "Suite size")->check(CLI::PositiveNumber);
  t->add_flag("--sweep", tr.sweep, "Sweep point counts plus the full-grid row");
  t->add_flag("--ablations", tr.ablations, "Coordinate, augmentation and noise ablations");
  t->add_option("--out", tr.out, "CSV output (stdout when omitted)");
  t->add_option("--n-list", tr.n_list, "Point counts for the sweep");
  t->add_option("--seeds", tr.seeds, "Point-location reseedings")->check(CLI::PositiveNumber);
  t->add_option("--steps", tr.steps, "Training steps");
  t->add_option("--lr", tr.lr, "Learning rate");
  t->add_option("--coords", tr.coords, "Coordinate input")->check(CLI::IsMember({"none", "rel", "pe"}));
  t->add_flag("--augment", tr.augment, "Half-subsample points each step");
  t->add_option("--feature-blur", tr.feature_blur, "Feature blur (pixels) of the sweep suite");
  t->add_option("--ablation-blur", tr.ablation_blur, "Feature blur (pixels) of the ablation suite");
  t->add_option("--points", tr.points, "Points per instance for ablations and export");
  t->add_option("--threads", tr.threads, "Worker threads (0 = all cores)");
  t->add_option("--export-dir", tr.export_dir, "Write head.bin and features.bin for the first instance");

  BudgetArgs bud;
  auto* b = app.add_subcommand("budget", "Annotation time budget");
  b->add_option("--instances", bud.instances, "Dataset instances")->check(CLI::NonNegativeNumber);
  b->add_option("--points", bud.points, "Points per instance")->check(CLI::NonNegativeNumber);
  b->add_option("--t-category", bud.params.t_category, "Seconds to label categories");
  b->add_option("--t-spotting", bud.params.t_spotting, "Seconds to spot an instance");
  b->add_option("--t-box", bud.params.t_box, "Seconds per box");
  b->add_option("--t-point", bud.params.t_point, "Seconds per point label");
  b->add_option("--t-mask", bud.params.t_mask, "Seconds per polygon mask");
  b->add_flag("--break-even", bud.break_even, "Report the break-even interval");
  b->add_option("--f-box", bud.f_box, "Data fraction with boxes");
  b->add_option("--f-mask", bud.f_mask, "Data fraction with masks");
  b->add_option("--f-point", bud.f_point, "Data fraction with points");
  b->add_option("--format", bud.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  ServeArgs srv;
  auto* v = app.add_subcommand("serve", "Run the annotation service");
  v->add_option("--dataset", srv.dataset, "Dataset JSON")->required()->check(CLI::ExistingFile);
  v->add_option("--root", srv.root, "Image directory");
  v->add_option("--host", srv.host, "Bind address");
  v->add_option("--port", srv.port, "Port (0 picks a free one)");
  v->add_option("--data-dir", srv.data_dir, "Session log directory (default $POINTSUP_DATA_DIR)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*s) return run_simulate(sim);
    if (*r) return run_render(ren);
    if (*t) return run_train(tr);
    if (*b) return run_budget(bud);
    if (*v) return run_serve(srv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
