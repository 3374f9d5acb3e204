#include <doctest.h>

#include <fstream>
#include <random>

#include "oracles.hpp"
#include "pointsup/head_io.hpp"

using namespace pointsup;

namespace {

HeadSnapshot sample_head(CoordEncoder enc) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> n;
  const HeadArch arch{3, enc.dim(), {4, 5, 2}};
  std::vector<double> flat(arch.param_count());
  for (auto& v : flat) v = n(gen);
  return {PointHeadParams(arch, flat), std::move(enc), BoundingBox{1.5, 2.25, 30.0, 17.5}};
}

void check_same(const HeadSnapshot& a, const HeadSnapshot& b) {
  CHECK(a.params.arch == b.params.arch);
  CHECK(a.params.flat == b.params.flat);
  CHECK(a.encoder.mode() == b.encoder.mode());
  CHECK(a.encoder.fourier_encoding().freq == b.encoder.fourier_encoding().freq);
  CHECK(a.encoder.fourier_encoding().sigma == b.encoder.fourier_encoding().sigma);
  CHECK(a.box == b.box);
}

}  // namespace

TEST_CASE("head snapshots round-trip through binary and JSON") {
  oracle::TempDir dir("headio");
  for (const auto& enc : {CoordEncoder::none(), CoordEncoder::relative(),
                          CoordEncoder::fourier(FourierEncoding::make(5, 1.3, 2))}) {
    const auto h = sample_head(enc);
    save_head(h, dir.path / "h.bin");
    check_same(h, load_head(dir.path / "h.bin"));
    save_head(h, dir.path / "h.json");
    check_same(h, load_head(dir.path / "h.json"));
    check_same(h, head_from_json(head_to_json(h)));
  }
}

TEST_CASE("binary head starts with its magic") {
  oracle::TempDir dir("headmagic");
  save_head_binary(sample_head(CoordEncoder::relative()), dir.path / "h.bin");
  std::ifstream in(dir.path / "h.bin", std::ios::binary);
  std::string magic(8, '\0');
  in.read(magic.data(), 8);
  CHECK(magic == "PSHEAD01");
}

TEST_CASE("corrupt head files are rejected") {
  oracle::TempDir dir("headbad");
  const auto p = dir.path / "h.bin";
  save_head_binary(sample_head(CoordEncoder::relative()), p);
  const auto full = std::filesystem::file_size(p);
  std::filesystem::resize_file(p, full - 5);
  CHECK_THROWS_AS(load_head_binary(p), Error);
  {
    std::ofstream out(p, std::ios::binary);
    out << "NOTAHEAD and some bytes";
  }
  CHECK_THROWS_AS(load_head_binary(p), Error);
  CHECK_THROWS_AS(load_head_binary(dir.path / "missing.bin"), Error);
  CHECK_THROWS_AS(head_from_json("{\"nope\": 1}"), Error);
  CHECK_THROWS_AS(head_from_json("not json"), Error);
}

TEST_CASE("feature grids round-trip") {
  oracle::TempDir dir("feat");
  FeatureGrid g(3, 4, 5);
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = 0.1 * double(i) - 2.0;
  save_features(g, dir.path / "f.bin");
  const auto back = load_features(dir.path / "f.bin");
  CHECK(back.channels == 3);
  CHECK(back.height == 4);
  CHECK(back.width == 5);
  CHECK(back.data == g.data);
  std::filesystem::resize_file(dir.path / "f.bin", 30);
  CHECK_THROWS_AS(load_features(dir.path / "f.bin"), Error);
}
