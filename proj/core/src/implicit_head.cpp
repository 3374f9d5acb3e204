#include "pointsup/implicit_head.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "pointsup/point_loss.hpp"
#include "pointsup/random.hpp"

namespace pointsup {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using ConstWeights = Eigen::Map<const RowMatrix>;
using Weights = Eigen::Map<RowMatrix>;
using ConstVector = Eigen::Map<const Eigen::VectorXd>;
using Vector = Eigen::Map<Eigen::VectorXd>;

void check_params(const PointHeadParams& params) {
  params.arch.validate();
  if (params.flat.size() != params.arch.param_count()) {
    throw Error("point head: parameter vector length does not match architecture");
  }
}

void check_inputs(const PointHeadParams& params, int dim) {
  if (dim != params.arch.input_dim()) {
    throw Error("point head: input dimension " + std::to_string(dim) + " does not match " +
                std::to_string(params.arch.input_dim()));
  }
}

// Pre-activations and activations of the three hidden layers.
struct Trace {
  std::array<Matrix, 3> pre;
  std::array<Matrix, 3> act;
};

Eigen::RowVectorXd forward_trace(const PointHeadParams& params, const Eigen::Map<const Matrix>& x,
                                 Trace* trace) {
  const auto shapes = layer_shapes(params.arch);
  const double* base = params.flat.data();
  Matrix h = x;
  for (int l = 0; l < 3; ++l) {
    const auto& s = shapes[l];
    ConstWeights w(base + s.weight_offset, s.out, s.in);
    ConstVector b(base + s.bias_offset, s.out);
    Matrix z = w * h;
    z.colwise() += b;
    Matrix a = z.cwiseMax(0.0);
    if (trace) {
      trace->pre[l] = z;
      trace->act[l] = a;
    }
    h = std::move(a);
  }
  const auto& s = shapes[3];
  ConstWeights w(base + s.weight_offset, s.out, s.in);
  Eigen::RowVectorXd logits = w * h;
  logits.array() += base[s.bias_offset];
  return logits;
}

}  // namespace

std::size_t HeadArch::param_count() const noexcept {
  std::size_t total = 0;
  int in = input_dim();
  for (const int out : hidden) {
    total += static_cast<std::size_t>(in) * out + out;
    in = out;
  }
  return total + static_cast<std::size_t>(in) + 1;
}

void HeadArch::validate() const {
  if (feature_dim < 0 || pe_dim < 0 || input_dim() < 1) {
    throw Error("HeadArch: input dimension must be positive");
  }
  for (const int h : hidden) {
    if (h < 1) throw Error("HeadArch: hidden widths must be positive");
  }
}

std::array<LayerShape, 4> layer_shapes(const HeadArch& arch) {
  std::array<LayerShape, 4> shapes;
  std::size_t offset = 0;
  int in = arch.input_dim();
  for (int l = 0; l < 4; ++l) {
    const int out = l < 3 ? arch.hidden[l] : 1;
    shapes[l] = {in, out, offset, offset + static_cast<std::size_t>(in) * out};
    offset = shapes[l].bias_offset + out;
    in = out;
  }
  return shapes;
}

PointHeadParams::PointHeadParams(HeadArch a) : arch(a), flat(a.param_count(), 0.0) {
  arch.validate();
}

PointHeadParams::PointHeadParams(HeadArch a, std::vector<double> values)
    : arch(a), flat(std::move(values)) {
  check_params(*this);
}

std::array<DenseLayer, 4> unpack_layers(const PointHeadParams& params) {
  check_params(params);
  std::array<DenseLayer, 4> layers;
  const auto shapes = layer_shapes(params.arch);
  for (int l = 0; l < 4; ++l) {
    const auto& s = shapes[l];
    const auto first = params.flat.begin();
    layers[l].in = s.in;
    layers[l].out = s.out;
    layers[l].weight.assign(first + static_cast<std::ptrdiff_t>(s.weight_offset),
                            first + static_cast<std::ptrdiff_t>(s.bias_offset));
    layers[l].bias.assign(first + static_cast<std::ptrdiff_t>(s.bias_offset),
                          first + static_cast<std::ptrdiff_t>(s.bias_offset + s.out));
  }
  return layers;
}

PointHeadParams pack_layers(const HeadArch& arch, const std::array<DenseLayer, 4>& layers) {
  PointHeadParams params(arch);
  const auto shapes = layer_shapes(arch);
  for (int l = 0; l < 4; ++l) {
    const auto& s = shapes[l];
    const auto& layer = layers[l];
    if (layer.in != s.in || layer.out != s.out ||
        layer.weight.size() != static_cast<std::size_t>(s.in) * s.out ||
        layer.bias.size() != static_cast<std::size_t>(s.out)) {
      throw Error("pack_layers: layer " + std::to_string(l) + " shape mismatch");
    }
    std::copy(layer.weight.begin(), layer.weight.end(),
              params.flat.begin() + static_cast<std::ptrdiff_t>(s.weight_offset));
    std::copy(layer.bias.begin(), layer.bias.end(),
              params.flat.begin() + static_cast<std::ptrdiff_t>(s.bias_offset));
  }
  return params;
}

PointHeadParams init_head_params(const HeadArch& arch, std::uint64_t seed) {
  PointHeadParams params(arch);
  Rng rng = Rng::stream(seed, kInitStreamKey);
  const auto shapes = layer_shapes(arch);
  for (int l = 0; l < 3; ++l) {
    const auto& s = shapes[l];
    const double scale = std::sqrt(2.0 / s.in);
    for (std::size_t i = s.weight_offset; i < s.bias_offset; ++i) params.flat[i] = scale * rng.normal();
  }
  return params;
}

FourierEncoding FourierEncoding::make(int m, double sigma, std::uint64_t seed) {
  if (m < 0) throw Error("FourierEncoding: negative frequency count");
  FourierEncoding enc;
  enc.m = m;
  enc.sigma = sigma;
  enc.seed = seed;
  Rng rng = Rng::stream(seed, kFourierStreamKey);
  enc.freq.resize(static_cast<std::size_t>(2 * m));
  for (auto& f : enc.freq) f = sigma * rng.normal();
  return enc;
}

std::vector<double> encode_position(Vec2 rel, const FourierEncoding& enc) {
  std::vector<double> out(static_cast<std::size_t>(enc.dim()));
  for (int k = 0; k < enc.m; ++k) {
    const double a = 2.0 * std::numbers::pi * (enc.freq[2 * k] * rel.x + enc.freq[2 * k + 1] * rel.y);
    out[k] = std::sin(a);
    out[enc.m + k] = std::cos(a);
  }
  return out;
}

const char* to_string(CoordMode mode) noexcept {
  switch (mode) {
    case CoordMode::none: return "none";
    case CoordMode::relative: return "rel";
    case CoordMode::fourier: return "pe";
  }
  return "none";
}

CoordMode coord_mode_from_string(const std::string& name) {
  if (name == "none") return CoordMode::none;
  if (name == "rel" || name == "relative") return CoordMode::relative;
  if (name == "pe" || name == "fourier") return CoordMode::fourier;
  throw Error("unknown coordinate mode '" + name + "'");
}

const char* to_string(ParamHeadMode mode) noexcept {
  return mode == ParamHeadMode::free ? "free" : "pooled";
}

ParamHeadMode param_head_mode_from_string(const std::string& name) {
  if (name == "free") return ParamHeadMode::free;
  if (name == "pooled" || name == "pooled-linear" || name == "pooled_linear") return ParamHeadMode::pooled_linear;
  throw Error("unknown head mode '" + name + "'");
}

int CoordEncoder::dim() const noexcept {
  switch (mode_) {
    case CoordMode::none: return 0;
    case CoordMode::relative: return 2;
    case CoordMode::fourier: return fourier_.dim();
  }
  return 0;
}

void CoordEncoder::encode(Vec2 rel, std::span<double> out) const {
  if (out.size() != static_cast<std::size_t>(dim())) throw Error("CoordEncoder: output size mismatch");
  switch (mode_) {
    case CoordMode::none:
      break;
    case CoordMode::relative:
      out[0] = rel.x;
      out[1] = rel.y;
      break;
    case CoordMode::fourier: {
      const auto enc = encode_position(rel, fourier_);
      std::copy(enc.begin(), enc.end(), out.begin());
      break;
    }
  }
}

std::vector<double> CoordEncoder::encode(Vec2 rel) const {
  std::vector<double> out(static_cast<std::size_t>(dim()));
  encode(rel, out);
  return out;
}

Vec2 box_relative(const BoundingBox& box, Vec2 p) noexcept {
  const Vec2 c = box.center();
  return {(p.x - c.x) / box.w, (p.y - c.y) / box.h};
}

FeatureGrid::FeatureGrid(int c, int h, int w)
    : channels(c), height(h), width(w),
      data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 0.0) {
  if (c < 0 || h < 1 || w < 1) throw Error("FeatureGrid: bad dimensions");
}

void sample_point_features(const FeatureGrid& grid, Vec2 p, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(grid.channels)) {
    throw Error("sample_point_features: output size mismatch");
  }
  const auto taps = bilinear_taps_pixel(grid.width, grid.height, p.x - 0.5, p.y - 0.5);
  const std::size_t plane = static_cast<std::size_t>(grid.width) * grid.height;
  for (int c = 0; c < grid.channels; ++c) {
    const double* ch = grid.data.data() + c * plane;
    double v = 0.0;
    for (int k = 0; k < 4; ++k) {
      if (taps.weight[k] != 0.0) v += taps.weight[k] * ch[taps.index[k]];
    }
    out[c] = v;
  }
}

std::vector<double> sample_point_features(const FeatureGrid& grid, Vec2 p) {
  std::vector<double> out(static_cast<std::size_t>(grid.channels));
  sample_point_features(grid, p, out);
  return out;
}

void accumulate_feature_gradient(const FeatureGrid& grid, Vec2 p, std::span<const double> dfeature,
                                 std::span<double> dgrid) {
  if (dfeature.size() != static_cast<std::size_t>(grid.channels) || dgrid.size() != grid.data.size()) {
    throw Error("accumulate_feature_gradient: size mismatch");
  }
  const auto taps = bilinear_taps_pixel(grid.width, grid.height, p.x - 0.5, p.y - 0.5);
  const std::size_t plane = static_cast<std::size_t>(grid.width) * grid.height;
  for (int c = 0; c < grid.channels; ++c) {
    for (int k = 0; k < 4; ++k) dgrid[c * plane + taps.index[k]] += taps.weight[k] * dfeature[c];
  }
}

std::vector<double> pool_region(const FeatureGrid& grid, const BoundingBox& box) {
  std::vector<double> mean(static_cast<std::size_t>(grid.channels), 0.0);
  std::size_t n = 0;
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      if (!box.contains({c + 0.5, r + 0.5})) continue;
      for (int ch = 0; ch < grid.channels; ++ch) mean[ch] += grid.at(ch, r, c);
      ++n;
    }
  }
  if (n == 0) throw Error("pool_region: box covers no pixel centers");
  for (auto& v : mean) v /= static_cast<double>(n);
  return mean;
}

HeadInputs HeadInputs::select(std::span<const std::size_t> indices) const {
  HeadInputs out(dim, indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = column(indices[i]);
    std::copy(src.begin(), src.end(), out.column(i).begin());
  }
  return out;
}

std::vector<double> head_forward_batch(const PointHeadParams& params, const HeadInputs& inputs) {
  check_params(params);
  check_inputs(params, inputs.dim);
  if (inputs.count == 0) return {};
  Eigen::Map<const Matrix> x(inputs.data.data(), inputs.dim, static_cast<Eigen::Index>(inputs.count));
  const Eigen::RowVectorXd logits = forward_trace(params, x, nullptr);
  return {logits.data(), logits.data() + logits.size()};
}

void head_backward_batch(const PointHeadParams& params, const HeadInputs& inputs,
                         std::span<const double> upstream, std::span<double> dparams,
                         HeadInputs* dinputs) {
  check_params(params);
  check_inputs(params, inputs.dim);
  if (upstream.size() != inputs.count) throw Error("head_backward: upstream length mismatch");
  if (dparams.size() != params.flat.size()) throw Error("head_backward: gradient buffer size mismatch");
  if (dinputs && (dinputs->dim != inputs.dim || dinputs->count != inputs.count)) {
    throw Error("head_backward: input gradient buffer shape mismatch");
  }
  if (inputs.count == 0) return;

  const auto n = static_cast<Eigen::Index>(inputs.count);
  Eigen::Map<const Matrix> x(inputs.data.data(), inputs.dim, n);
  Trace trace;
  forward_trace(params, x, &trace);

  const auto shapes = layer_shapes(params.arch);
  const double* base = params.flat.data();
  double* grad = dparams.data();

  Eigen::Map<const Eigen::RowVectorXd> dz_out(upstream.data(), n);
  {
    const auto& s = shapes[3];
    Weights(grad + s.weight_offset, s.out, s.in) += dz_out * trace.act[2].transpose();
    grad[s.bias_offset] += dz_out.sum();
  }
  Matrix delta = ConstWeights(base + shapes[3].weight_offset, 1, shapes[3].in).transpose() * dz_out;
  for (int l = 2; l >= 0; --l) {
    const auto& s = shapes[l];
    delta = delta.cwiseProduct((trace.pre[l].array() > 0.0).cast<double>().matrix());
    const Matrix& below = l > 0 ? trace.act[l - 1] : Matrix(x);
    Weights(grad + s.weight_offset, s.out, s.in) += delta * below.transpose();
    Vector(grad + s.bias_offset, s.out) += delta.rowwise().sum();
    if (l > 0 || dinputs) {
      delta = ConstWeights(base + s.weight_offset, s.out, s.in).transpose() * delta;
    }
  }
  if (dinputs) {
    Eigen::Map<Matrix>(dinputs->data.data(), inputs.dim, n) += delta;
  }
}

double head_forward(const PointHeadParams& params, std::span<const double> feature,
                    std::span<const double> pe) {
  if (feature.size() != static_cast<std::size_t>(params.arch.feature_dim) ||
      pe.size() != static_cast<std::size_t>(params.arch.pe_dim)) {
    throw Error("head_forward: feature or encoding dimension mismatch");
  }
  HeadInputs in(params.arch.input_dim(), 1);
  auto col = in.column(0);
  std::copy(feature.begin(), feature.end(), col.begin());
  std::copy(pe.begin(), pe.end(), col.begin() + static_cast<std::ptrdiff_t>(feature.size()));
  return head_forward_batch(params, in)[0];
}

HeadGradients head_backward(const PointHeadParams& params, std::span<const double> feature,
                            std::span<const double> pe, double upstream) {
  if (feature.size() != static_cast<std::size_t>(params.arch.feature_dim) ||
      pe.size() != static_cast<std::size_t>(params.arch.pe_dim)) {
    throw Error("head_backward: feature or encoding dimension mismatch");
  }
  HeadInputs in(params.arch.input_dim(), 1);
  auto col = in.column(0);
  std::copy(feature.begin(), feature.end(), col.begin());
  std::copy(pe.begin(), pe.end(), col.begin() + static_cast<std::ptrdiff_t>(feature.size()));
  HeadGradients g;
  g.dparams.assign(params.flat.size(), 0.0);
  HeadInputs din(in.dim, 1);
  const double up[1] = {upstream};
  head_backward_batch(params, in, up, g.dparams, &din);
  g.dfeature.assign(din.data.begin(), din.data.begin() + params.arch.feature_dim);
  return g;
}

L2Result l2_param_loss(std::span<const double> params, double weight) {
  L2Result r;
  r.grad.resize(params.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    sum += params[i] * params[i];
    r.grad[i] = 2.0 * weight * params[i];
  }
  r.loss = weight * sum;
  return r;
}

ParamHead ParamHead::make_free(const HeadArch& arch, std::uint64_t seed) {
  ParamHead head(ParamHeadMode::free, arch, 0);
  head.trainable_ = init_head_params(arch, seed).flat;
  return head;
}

ParamHead ParamHead::make_pooled_linear(const HeadArch& arch, int descriptor_dim, std::uint64_t seed) {
  if (descriptor_dim < 1) throw Error("pooled-linear parameter head needs a descriptor");
  ParamHead head(ParamHeadMode::pooled_linear, arch, descriptor_dim);
  const std::size_t p = arch.param_count();
  head.trainable_.assign(p * static_cast<std::size_t>(descriptor_dim) + p, 0.0);
  Rng rng = Rng::stream(seed ^ 0x706f6f6cULL, kInitStreamKey);
  for (std::size_t i = 0; i < p * static_cast<std::size_t>(descriptor_dim); ++i) {
    head.trainable_[i] = 0.01 * rng.normal();
  }
  const auto c = init_head_params(arch, seed).flat;
  std::copy(c.begin(), c.end(), head.trainable_.begin() + static_cast<std::ptrdiff_t>(p * descriptor_dim));
  return head;
}

void ParamHead::check_descriptor(std::span<const double> descriptor) const {
  if (descriptor.size() != static_cast<std::size_t>(descriptor_dim_)) {
    throw Error("parameter head: descriptor dimension " + std::to_string(descriptor.size()) +
                " does not match " + std::to_string(descriptor_dim_));
  }
}

PointHeadParams ParamHead::generate(std::span<const double> descriptor) const {
  check_descriptor(descriptor);
  const std::size_t p = param_count();
  const std::size_t d = static_cast<std::size_t>(descriptor_dim_);
  std::vector<double> flat(trainable_.begin() + static_cast<std::ptrdiff_t>(p * d), trainable_.end());
  if (d > 0) {
    ConstWeights a(trainable_.data(), static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(d));
    ConstVector desc(descriptor.data(), static_cast<Eigen::Index>(d));
    Vector(flat.data(), static_cast<Eigen::Index>(p)) += a * desc;
  }
  return PointHeadParams(arch_, std::move(flat));
}

void ParamHead::accumulate_gradient(std::span<const double> descriptor, std::span<const double> dparams,
                                    std::span<double> grad) const {
  check_descriptor(descriptor);
  const std::size_t p = param_count();
  const std::size_t d = static_cast<std::size_t>(descriptor_dim_);
  if (dparams.size() != p || grad.size() != trainable_.size()) {
    throw Error("parameter head: gradient buffer size mismatch");
  }
  ConstVector dp(dparams.data(), static_cast<Eigen::Index>(p));
  if (d > 0) {
    ConstVector desc(descriptor.data(), static_cast<Eigen::Index>(d));
    Weights(grad.data(), static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(d)) += dp * desc.transpose();
  }
  Vector(grad.data() + p * d, static_cast<Eigen::Index>(p)) += dp;
}

}  // namespace pointsup
