#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pointsup/geometry.hpp"

namespace pointsup {

/// Shape of the point head MLP: [feature; encoding] -> 3 ReLU hidden
/// layers -> one logit.
struct HeadArch {
  int feature_dim = 256;
  int pe_dim = 128;
  std::array<int, 3> hidden{256, 256, 256};

  int input_dim() const noexcept { return feature_dim + pe_dim; }
  std::size_t param_count() const noexcept;
  void validate() const;

  friend bool operator==(const HeadArch&, const HeadArch&) = default;
};

/// Placement of one dense layer inside the flat parameter vector: the
/// weight matrix (out x in, row-major) followed by the bias.
struct LayerShape {
  int in = 0;
  int out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::array<LayerShape, 4> layer_shapes(const HeadArch& arch);

/// Per-instance point head parameters.
struct PointHeadParams {
  HeadArch arch;
  std::vector<double> flat;

  PointHeadParams() = default;
  explicit PointHeadParams(HeadArch a);
  PointHeadParams(HeadArch a, std::vector<double> values);
};

/// Dense matrices of one layer, used for packing tests and debugging.
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weight;  ///< out x in, row-major
  std::vector<double> bias;
};

std::array<DenseLayer, 4> unpack_layers(const PointHeadParams& params);
PointHeadParams pack_layers(const HeadArch& arch, const std::array<DenseLayer, 4>& layers);

/// Hidden layers He-initialized, output layer zero, so every logit starts
/// at 0 (probability 0.5) while gradients still reach every layer.
PointHeadParams init_head_params(const HeadArch& arch, std::uint64_t seed);

/// Random Fourier features of box-relative coordinates.
struct FourierEncoding {
  int m = 0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> freq;  ///< m x 2, row-major

  static FourierEncoding make(int m, double sigma, std::uint64_t seed);
  int dim() const noexcept { return 2 * m; }
};

/// [sin(2 pi B p), cos(2 pi B p)].
std::vector<double> encode_position(Vec2 rel, const FourierEncoding& enc);

enum class CoordMode : std::uint8_t {
  none,      ///< no coordinate input
  relative,  ///< raw box-relative (dx, dy)
  fourier,   ///< random Fourier encoding of (dx, dy)
};

const char* to_string(CoordMode mode) noexcept;
CoordMode coord_mode_from_string(const std::string& name);

class CoordEncoder {
 public:
  CoordEncoder() = default;
  static CoordEncoder none() { return CoordEncoder(CoordMode::none, {}); }
  static CoordEncoder relative() { return CoordEncoder(CoordMode::relative, {}); }
  static CoordEncoder fourier(FourierEncoding enc) {
    return CoordEncoder(CoordMode::fourier, std::move(enc));
  }

  CoordMode mode() const noexcept { return mode_; }
  const FourierEncoding& fourier_encoding() const noexcept { return fourier_; }
  int dim() const noexcept;
  void encode(Vec2 rel, std::span<double> out) const;
  std::vector<double> encode(Vec2 rel) const;

 private:
  CoordEncoder(CoordMode mode, FourierEncoding enc) : mode_(mode), fourier_(std::move(enc)) {}

  CoordMode mode_ = CoordMode::none;
  FourierEncoding fourier_;
};

/// ((x - cx) / w, (y - cy) / h); in [-0.5, 0.5]^2 inside the box.
Vec2 box_relative(const BoundingBox& box, Vec2 image_point) noexcept;

/// C x H x W fine-grained feature map in image pixel coordinates.
struct FeatureGrid {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;  ///< channel-major, then row-major

  FeatureGrid() = default;
  FeatureGrid(int c, int h, int w);

  double at(int ch, int row, int col) const {
    return data[(static_cast<std::size_t>(ch) * height + row) * width + col];
  }
  double& at(int ch, int row, int col) {
    return data[(static_cast<std::size_t>(ch) * height + row) * width + col];
  }
  std::span<const double> channel(int ch) const {
    return {data.data() + static_cast<std::size_t>(ch) * height * width,
            static_cast<std::size_t>(height) * width};
  }
};

/// Per-channel bilinear sample at a continuous image point.
std::vector<double> sample_point_features(const FeatureGrid& grid, Vec2 image_point);
void sample_point_features(const FeatureGrid& grid, Vec2 image_point, std::span<double> out);
/// Scatter d loss / d feature back onto the grid (accumulates).
void accumulate_feature_gradient(const FeatureGrid& grid, Vec2 image_point,
                                 std::span<const double> dfeature, std::span<double> dgrid);

/// Mean feature over the pixels whose centers lie inside the box.
std::vector<double> pool_region(const FeatureGrid& grid, const BoundingBox& box);

/// One logit for one point.
double head_forward(const PointHeadParams& params, std::span<const double> feature,
                    std::span<const double> pe);

struct HeadGradients {
  std::vector<double> dparams;
  std::vector<double> dfeature;
};

/// Reverse-mode gradients of upstream * logit. The encoding is a constant
/// input.
HeadGradients head_backward(const PointHeadParams& params, std::span<const double> feature,
                            std::span<const double> pe, double upstream);

/// Inputs for many points; column i is [feature_i; pe_i].
struct HeadInputs {
  int dim = 0;
  std::size_t count = 0;
  std::vector<double> data;

  HeadInputs() = default;
  HeadInputs(int d, std::size_t n) : dim(d), count(n), data(static_cast<std::size_t>(d) * n, 0.0) {}

  std::span<double> column(std::size_t i) {
    return {data.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  std::span<const double> column(std::size_t i) const {
    return {data.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  HeadInputs select(std::span<const std::size_t> indices) const;
};

std::vector<double> head_forward_batch(const PointHeadParams& params, const HeadInputs& inputs);

/// Accumulates d(sum_i upstream_i * logit_i)/d params into dparams, and the
/// input gradient (same layout as inputs) into dinputs when non-null.
void head_backward_batch(const PointHeadParams& params, const HeadInputs& inputs,
                         std::span<const double> upstream, std::span<double> dparams,
                         HeadInputs* dinputs = nullptr);

struct L2Result {
  double loss = 0.0;
  std::vector<double> grad;
};

inline constexpr double kDefaultL2Weight = 1e-5;

/// weight * sum(theta^2), gradient 2 * weight * theta.
L2Result l2_param_loss(std::span<const double> params, double weight = kDefaultL2Weight);

enum class ParamHeadMode : std::uint8_t { free, pooled_linear };

const char* to_string(ParamHeadMode mode) noexcept;
ParamHeadMode param_head_mode_from_string(const std::string& name);

/// Produces point head parameters per instance: params = A * descriptor + c.
/// In free mode the descriptor is empty and c is optimized per instance.
class ParamHead {
 public:
  static ParamHead make_free(const HeadArch& arch, std::uint64_t seed);
  /// A ~ N(0, 0.01^2); c starts at the free-mode initialization.
  static ParamHead make_pooled_linear(const HeadArch& arch, int descriptor_dim, std::uint64_t seed);

  ParamHeadMode mode() const noexcept { return mode_; }
  const HeadArch& arch() const noexcept { return arch_; }
  int descriptor_dim() const noexcept { return descriptor_dim_; }
  std::size_t param_count() const noexcept { return arch_.param_count(); }

  /// Trainable values: A (param_count x descriptor_dim, row-major) then c.
  std::span<double> trainable() noexcept { return trainable_; }
  std::span<const double> trainable() const noexcept { return trainable_; }

  PointHeadParams generate(std::span<const double> descriptor = {}) const;

  /// Accumulate dA = dparams * descriptor^T and dc = dparams into grad
  /// (same layout as trainable()).
  void accumulate_gradient(std::span<const double> descriptor, std::span<const double> dparams,
                           std::span<double> grad) const;

 private:
  ParamHead(ParamHeadMode mode, HeadArch arch, int descriptor_dim)
      : mode_(mode), arch_(arch), descriptor_dim_(descriptor_dim) {}
  void check_descriptor(std::span<const double> descriptor) const;

  ParamHeadMode mode_ = ParamHeadMode::free;
  HeadArch arch_;
  int descriptor_dim_ = 0;
  std::vector<double> trainable_;
};

}  // namespace pointsup
