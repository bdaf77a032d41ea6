#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "camf/cam.hpp"
#include "camf/tensor.hpp"

namespace camf {

enum class EncodingKind {
  Gaussian,    // random Fourier features, b_ij ~ N(0, scale^2)
  PowerOfTwo,  // axis-aligned frequencies 2^j * pi, j = 0..L-1
};

/// Fixed sinusoidal coordinate encoding: [cos(2*pi*B*x), sin(2*pi*B*x)],
/// optionally preceded by the raw coordinates.
struct FourierEncoding {
  EncodingKind kind = EncodingKind::Gaussian;
  std::size_t input_dim = 0;
  std::size_t frequencies = 0;  // rows of the projection matrix (m)
  Real gaussian_scale = 0;
  std::uint64_t seed = 0;
  bool include_input = false;
  Tensor projection;  // [m x input_dim]

  static FourierEncoding gaussian(std::size_t input_dim, std::size_t frequencies, Real scale,
                                  std::uint64_t seed, bool include_input = false);
  /// `levels` frequencies per input axis, so m = levels * input_dim.
  static FourierEncoding power_of_two(std::size_t input_dim, std::size_t levels,
                                      bool include_input = false);

  std::size_t output_dim() const { return 2 * frequencies + (include_input ? input_dim : 0); }
};

/// Encodes x [N x D]. The result is a constant (encodings are not trained).
Tensor fourier_features(const FourierEncoding& enc, const Tensor& x);

struct LinearLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]

  std::size_t in_features() const { return weight.dim(1); }
  std::size_t out_features() const { return weight.dim(0); }
};

/// Weights uniform in [-1/sqrt(in), 1/sqrt(in)], zero bias.
LinearLayer init_linear(std::size_t in, std::size_t out, std::uint64_t seed);

enum class Activation { Relu, Sigmoid };

/// A CAM layer placed inside a 2-D [rows x width] feature stream. Ray mode
/// views rows as N rays of `samples_per_ray` points; Channel mode views the
/// width as C x H x W.
struct CamStage {
  CamLayer layer;
  std::size_t samples_per_ray = 1;
  std::size_t channels = 0, height = 0, width = 0;
};

using Stage = std::variant<FourierEncoding, LinearLayer, Activation, CamStage>;

enum class ParamGroup { Network, Grid };

struct ParamRef {
  std::string name;
  Tensor* value;
  ParamGroup group;
};

/// Ordered composition of stages mapping coordinates [N x D] in [0,1]^D to
/// signal values [N x out].
class FieldModel {
 public:
  FieldModel() = default;
  FieldModel(std::size_t input_dim, std::vector<Stage> stages);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  const std::vector<Stage>& stages() const { return stages_; }
  std::vector<Stage>& stages() { return stages_; }

  /// Checks stage adjacency and returns the output width. Throws on error.
  std::size_t validate() const;

  /// Trainable tensors in a fixed order.
  std::vector<ParamRef> parameters();
  std::size_t parameter_count() const;

  /// Forward pass. `bound` may hold tape-tracked aliases of parameters()
  /// in the same order; when empty the stored values are used. When
  /// `capture` is set it receives every stage's output. `encoded` may hold
  /// a cached output of the leading encoding stage for the same rows.
  Tensor forward(const Tensor& x, std::span<const Tensor> bound = {},
                 std::vector<Tensor>* capture = nullptr, const Tensor* encoded = nullptr) const;

  /// Output of the leading encoding stage, or `x` when there is none.
  Tensor encode(const Tensor& x) const;

 private:
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::vector<Stage> stages_;
};

/// Rejects coordinates outside [0,1] by more than 1e-6.
void check_unit_coordinates(const Tensor& x);

/// Declarative description of the MLP family used by every task.
struct MlpSpec {
  std::size_t input_dim = 2;
  std::size_t output_dim = 3;
  std::size_t layers = 4;  // linear layers, including the head
  std::size_t width = 256;
  Activation hidden_activation = Activation::Relu;
  bool sigmoid_head = true;

  enum class Encoding { None, Gaussian, PowerOfTwo } encoding = Encoding::None;
  std::size_t frequencies = 256;  // Gaussian rows, or power-of-two levels
  Real gaussian_scale = 10;
  bool include_input = false;

  bool cam = false;
  bool cam_normalize = true;
  CamMode cam_mode = CamMode::Scalar;
  ChannelNorm channel_norm = ChannelNorm::Plane;
  Real cam_epsilon = kDefaultCamEpsilon;
  std::vector<std::size_t> cam_layers;  // hidden layer indices; empty = all hidden layers
  std::vector<std::size_t> grid_resolution{32, 32};
  std::vector<std::size_t> cam_selector;
  std::size_t grid_channels = 1;
  std::size_t samples_per_ray = 1;
  /// Channel mode: hidden features viewed as [C x H x W] with C*H*W = width.
  std::size_t feature_channels = 0, feature_height = 0, feature_width = 0;

  std::uint64_t seed = 0;

  bool operator==(const MlpSpec&) const = default;
};

FieldModel build_mlp(const MlpSpec& spec);

}  // namespace camf
