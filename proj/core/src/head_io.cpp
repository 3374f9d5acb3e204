#include "pointsup/head_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pointsup {
namespace {

constexpr char kHeadMagic[8] = {'P', 'S', 'H', 'E', 'A', 'D', '0', '1'};
constexpr char kFeatMagic[8] = {'P', 'S', 'F', 'E', 'A', 'T', '0', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error("truncated binary file");
  return value;
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw Error("truncated binary file");
  return v;
}

void expect_magic(std::istream& in, const char (&magic)[8], const std::filesystem::path& path) {
  char buf[8];
  in.read(buf, 8);
  if (!in || std::memcmp(buf, magic, 8) != 0) throw Error(path.string() + ": bad magic");
}

CoordEncoder make_encoder(CoordMode mode, int m, double sigma, std::uint64_t seed,
                          std::vector<double> freq) {
  switch (mode) {
    case CoordMode::none: return CoordEncoder::none();
    case CoordMode::relative: return CoordEncoder::relative();
    case CoordMode::fourier: {
      FourierEncoding enc;
      enc.m = m;
      enc.sigma = sigma;
      enc.seed = seed;
      if (freq.size() != static_cast<std::size_t>(2 * m)) throw Error("frequency matrix size mismatch");
      enc.freq = std::move(freq);
      return CoordEncoder::fourier(std::move(enc));
    }
  }
  throw Error("unknown coordinate mode");
}

void check_snapshot(const HeadSnapshot& head) {
  if (head.encoder.dim() != head.params.arch.pe_dim) {
    throw Error("head snapshot: encoder dimension does not match architecture");
  }
}

}  // namespace

void save_head_binary(const HeadSnapshot& head, const std::filesystem::path& path) {
  check_snapshot(head);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const auto& a = head.params.arch;
  const auto& f = head.encoder.fourier_encoding();
  out.write(kHeadMagic, 8);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(a.feature_dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(a.pe_dim));
  for (const int h : a.hidden) put<std::uint32_t>(out, static_cast<std::uint32_t>(h));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(head.encoder.mode()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(f.m));
  put<double>(out, f.sigma);
  put<std::uint64_t>(out, f.seed);
  put_doubles(out, f.freq);
  put_doubles(out, {head.box.x, head.box.y, head.box.w, head.box.h});
  put<std::uint64_t>(out, head.params.flat.size());
  put_doubles(out, head.params.flat);
  if (!out) throw Error("write failed for " + path.string());
}

HeadSnapshot load_head_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  expect_magic(in, kHeadMagic, path);
  HeadArch arch;
  arch.feature_dim = static_cast<int>(get<std::uint32_t>(in));
  arch.pe_dim = static_cast<int>(get<std::uint32_t>(in));
  for (auto& h : arch.hidden) h = static_cast<int>(get<std::uint32_t>(in));
  const auto mode = static_cast<CoordMode>(get<std::uint8_t>(in));
  const int m = static_cast<int>(get<std::uint32_t>(in));
  const double sigma = get<double>(in);
  const auto seed = get<std::uint64_t>(in);
  auto freq = get_doubles(in, static_cast<std::size_t>(2 * m));
  const auto box = get_doubles(in, 4);
  const auto n = get<std::uint64_t>(in);
  if (n != arch.param_count()) throw Error(path.string() + ": parameter count does not match header");
  HeadSnapshot head{PointHeadParams(arch, get_doubles(in, n)),
                    make_encoder(mode, m, sigma, seed, std::move(freq)),
                    {box[0], box[1], box[2], box[3]}};
  check_snapshot(head);
  return head;
}

std::string head_to_json(const HeadSnapshot& head) {
  check_snapshot(head);
  const auto& a = head.params.arch;
  const auto& f = head.encoder.fourier_encoding();
  nlohmann::json doc{
      {"arch", {{"feature_dim", a.feature_dim}, {"pe_dim", a.pe_dim}, {"hidden", a.hidden}}},
      {"encoding",
       {{"mode", to_string(head.encoder.mode())}, {"m", f.m}, {"sigma", f.sigma}, {"seed", f.seed}, {"freq", f.freq}}},
      {"box", {head.box.x, head.box.y, head.box.w, head.box.h}},
      {"params", head.params.flat}};
  return doc.dump();
}

HeadSnapshot head_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    HeadArch arch;
    arch.feature_dim = doc.at("arch").at("feature_dim").get<int>();
    arch.pe_dim = doc.at("arch").at("pe_dim").get<int>();
    arch.hidden = doc.at("arch").at("hidden").get<std::array<int, 3>>();
    const auto& e = doc.at("encoding");
    const auto box = doc.at("box").get<std::vector<double>>();
    if (box.size() != 4) throw Error("head JSON: box must have 4 entries");
    HeadSnapshot head{PointHeadParams(arch, doc.at("params").get<std::vector<double>>()),
                      make_encoder(coord_mode_from_string(e.at("mode").get<std::string>()),
                                   e.at("m").get<int>(), e.at("sigma").get<double>(),
                                   e.at("seed").get<std::uint64_t>(), e.at("freq").get<std::vector<double>>()),
                      {box[0], box[1], box[2], box[3]}};
    check_snapshot(head);
    return head;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(std::string("head JSON: ") + ex.what());
  }
}

void save_head(const HeadSnapshot& head, const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << head_to_json(head) << '\n';
  } else {
    save_head_binary(head, path);
  }
}

HeadSnapshot load_head(const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return head_from_json(ss.str());
  }
  return load_head_binary(path);
}

void save_features(const FeatureGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kFeatMagic, 8);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.channels));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.width));
  put_doubles(out, grid.data);
  if (!out) throw Error("write failed for " + path.string());
}

FeatureGrid load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  expect_magic(in, kFeatMagic, path);
  const int c = static_cast<int>(get<std::uint32_t>(in));
  const int h = static_cast<int>(get<std::uint32_t>(in));
  const int w = static_cast<int>(get<std::uint32_t>(in));
  FeatureGrid grid(c, h, w);
  grid.data = get_doubles(in, grid.data.size());
  return grid;
}

}  // namespace pointsup
