#include "camf/nn.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "camf/ops.hpp"
#include "camf/seed.hpp"

namespace camf {

FourierEncoding FourierEncoding::gaussian(std::size_t input_dim, std::size_t frequencies,
                                          Real scale, std::uint64_t seed, bool include_input) {
  if (input_dim == 0 || frequencies == 0) {
    throw std::invalid_argument("gaussian encoding needs positive input dim and frequency count");
  }
  FourierEncoding enc;
  enc.kind = EncodingKind::Gaussian;
  enc.input_dim = input_dim;
  enc.frequencies = frequencies;
  enc.gaussian_scale = scale;
  enc.seed = seed;
  enc.include_input = include_input;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, static_cast<double>(scale));
  std::vector<Real> b(frequencies * input_dim);
  for (auto& v : b) v = static_cast<Real>(normal(rng));
  enc.projection = Tensor(Shape{frequencies, input_dim}, std::move(b));
  return enc;
}

FourierEncoding FourierEncoding::power_of_two(std::size_t input_dim, std::size_t levels,
                                              bool include_input) {
  if (input_dim == 0 || levels == 0) {
    throw std::invalid_argument("power-of-two encoding needs positive input dim and levels");
  }
  FourierEncoding enc;
  enc.kind = EncodingKind::PowerOfTwo;
  enc.input_dim = input_dim;
  enc.frequencies = levels * input_dim;
  enc.include_input = include_input;
  std::vector<Real> b(enc.frequencies * input_dim, Real(0));
  // row (j, d): 2*pi * 2^(j-1) * x_d = 2^j * pi * x_d
  for (std::size_t j = 0; j < levels; ++j)
    for (std::size_t d = 0; d < input_dim; ++d)
      b[(j * input_dim + d) * input_dim + d] = static_cast<Real>(std::ldexp(1.0, static_cast<int>(j) - 1));
  enc.projection = Tensor(Shape{enc.frequencies, input_dim}, std::move(b));
  return enc;
}

Tensor fourier_features(const FourierEncoding& enc, const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) != enc.input_dim) {
    throw std::invalid_argument("encoding expects [N x " + std::to_string(enc.input_dim) +
                                "] coordinates, got " + to_string(x.shape()));
  }
  const std::size_t n = x.dim(0), d = enc.input_dim, m = enc.frequencies;
  const std::size_t width = enc.output_dim();
  const std::size_t off = enc.include_input ? d : 0;
  const auto xs = x.data();
  const auto b = enc.projection.data();
  std::vector<Real> out(n * width);
  for (std::size_t r = 0; r < n; ++r) {
    Real* row = out.data() + r * width;
    for (std::size_t k = 0; k < off; ++k) row[k] = xs[r * d + k];
    for (std::size_t j = 0; j < m; ++j) {
      double phase = 0.0;
      for (std::size_t k = 0; k < d; ++k) phase += static_cast<double>(b[j * d + k]) * xs[r * d + k];
      phase *= 2.0 * std::numbers::pi;
      row[off + j] = static_cast<Real>(std::cos(phase));
      row[off + m + j] = static_cast<Real>(std::sin(phase));
    }
  }
  return Tensor(Shape{n, width}, std::move(out));
}

LinearLayer init_linear(std::size_t in, std::size_t out, std::uint64_t seed) {
  if (in == 0 || out == 0) {
    throw std::invalid_argument("linear layer dimensions must be positive");
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-bound, bound);
  std::vector<Real> w(in * out);
  for (auto& v : w) v = static_cast<Real>(uni(rng));
  return {Tensor(Shape{out, in}, std::move(w)), Tensor(Shape{out}, Real(0))};
}

void check_unit_coordinates(const Tensor& x) {
  for (Real v : x.data()) {
    if (!(v >= -1e-6 && v <= 1.0 + 1e-6)) {
      throw std::invalid_argument("coordinate " + std::to_string(v) +
                                  " outside [0,1]; normalize inputs before the model");
    }
  }
}

FieldModel::FieldModel(std::size_t input_dim, std::vector<Stage> stages)
    : input_dim_(input_dim), stages_(std::move(stages)) {
  output_dim_ = validate();
}

std::size_t FieldModel::validate() const {
  if (input_dim_ == 0) throw std::invalid_argument("model input dimension must be positive");
  std::size_t width = input_dim_;
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    const std::string where = "stage " + std::to_string(i) + ": ";
    const Stage& st = stages_[i];
    if (const auto* enc = std::get_if<FourierEncoding>(&st)) {
      if (i != 0) throw std::invalid_argument(where + "encoding must be the first stage");
      if (enc->input_dim != input_dim_ || enc->projection.shape() != Shape{enc->frequencies, enc->input_dim})
        throw std::invalid_argument(where + "encoding does not match the input dimension");
      width = enc->output_dim();
    } else if (const auto* lin = std::get_if<LinearLayer>(&st)) {
      if (lin->weight.rank() != 2 || lin->bias.shape() != Shape{lin->weight.dim(0)})
        throw std::invalid_argument(where + "malformed linear layer");
      if (lin->in_features() != width)
        throw std::invalid_argument(where + "linear expects width " +
                                    std::to_string(lin->in_features()) + ", stream has " +
                                    std::to_string(width));
      width = lin->out_features();
    } else if (const auto* cs = std::get_if<CamStage>(&st)) {
      cs->layer.validate();
      const std::size_t grid_rank = cs->layer.gamma.rank();
      const std::size_t coord_dim =
          cs->layer.selector.empty() ? input_dim_ : cs->layer.selector.size();
      for (std::size_t s : cs->layer.selector)
        if (s >= input_dim_) throw std::invalid_argument(where + "cam selector out of range");
      if (coord_dim != grid_rank)
        throw std::invalid_argument(where + "cam grid rank differs from selected coordinates");
      if (cs->layer.mode == CamMode::Channel) {
        if (cs->channels * cs->height * cs->width != width || width == 0)
          throw std::invalid_argument(where + "channel view does not tile the feature width");
        if (cs->layer.gamma.channels != 1 && cs->layer.gamma.channels != cs->channels)
          throw std::invalid_argument(where + "channel grid width differs from C");
      }
      if (cs->layer.mode == CamMode::Ray && cs->samples_per_ray == 0)
        throw std::invalid_argument(where + "ray stage needs samples_per_ray > 0");
    }
  }
  return width;
}

std::vector<ParamRef> FieldModel::parameters() {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    const std::string prefix = "stage" + std::to_string(i);
    if (auto* lin = std::get_if<LinearLayer>(&stages_[i])) {
      out.push_back({prefix + ".weight", &lin->weight, ParamGroup::Network});
      out.push_back({prefix + ".bias", &lin->bias, ParamGroup::Network});
    } else if (auto* cs = std::get_if<CamStage>(&stages_[i])) {
      out.push_back({prefix + ".gamma", &cs->layer.gamma.values, ParamGroup::Grid});
      out.push_back({prefix + ".beta", &cs->layer.beta.values, ParamGroup::Grid});
    }
  }
  return out;
}

std::size_t FieldModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& st : stages_) {
    if (const auto* lin = std::get_if<LinearLayer>(&st)) n += lin->weight.size() + lin->bias.size();
    if (const auto* cs = std::get_if<CamStage>(&st))
      n += cs->layer.gamma.values.size() + cs->layer.beta.values.size();
  }
  return n;
}

namespace {

Tensor ray_coordinates(const Tensor& x, std::size_t samples) {
  const std::size_t rows = x.dim(0), d = x.dim(1);
  if (rows % samples != 0) {
    throw std::invalid_argument("ray stage: " + std::to_string(rows) +
                                " points do not form whole rays of " + std::to_string(samples));
  }
  const std::size_t rays = rows / samples;
  const auto src = x.data();
  std::vector<Real> out(rays * d);
  for (std::size_t r = 0; r < rays; ++r)
    for (std::size_t k = 0; k < d; ++k) out[r * d + k] = src[r * samples * d + k];
  return Tensor(Shape{rays, d}, std::move(out));
}

}  // namespace

Tensor FieldModel::encode(const Tensor& x) const {
  if (!stages_.empty())
    if (const auto* enc = std::get_if<FourierEncoding>(&stages_.front())) return fourier_features(*enc, x);
  return x;
}

Tensor FieldModel::forward(const Tensor& x, std::span<const Tensor> bound,
                           std::vector<Tensor>* capture, const Tensor* encoded) const {
  if (x.rank() != 2 || x.dim(1) != input_dim_) {
    throw std::invalid_argument("model expects [N x " + std::to_string(input_dim_) +
                                "] coordinates, got " + to_string(x.shape()));
  }
  check_unit_coordinates(x);
  std::size_t cursor = 0;
  auto param = [&](const Tensor& own) -> const Tensor& {
    if (bound.empty()) return own;
    if (cursor >= bound.size()) throw std::invalid_argument("too few bound parameters");
    return bound[cursor++];
  };

  Tensor h = x;
  for (const Stage& st : stages_) {
    if (const auto* enc = std::get_if<FourierEncoding>(&st)) {
      if (encoded && encoded->shape() != Shape{x.dim(0), enc->output_dim()})
        throw std::invalid_argument("cached encoding has shape " + to_string(encoded->shape()));
      h = encoded ? *encoded : fourier_features(*enc, h);
    } else if (const auto* lin = std::get_if<LinearLayer>(&st)) {
      const Tensor& w = param(lin->weight);
      const Tensor& b = param(lin->bias);
      h = ops::linear(h, w, b);
    } else if (const auto* act = std::get_if<Activation>(&st)) {
      h = *act == Activation::Relu ? ops::relu(h) : ops::sigmoid(h);
    } else if (const auto* cs = std::get_if<CamStage>(&st)) {
      const CamParams p{param(cs->layer.gamma.values), param(cs->layer.beta.values)};
      const std::size_t rows = h.dim(0), width = h.dim(1);
      switch (cs->layer.mode) {
        case CamMode::Scalar:
          h = cam_scalar(cs->layer, h, x, p);
          break;
        case CamMode::Ray: {
          const std::size_t s = cs->samples_per_ray;
          const Tensor f = ops::reshape(h, {rows / s, s, width});
          h = ops::reshape(cam_ray(cs->layer, f, ray_coordinates(x, s), p), {rows, width});
          break;
        }
        case CamMode::Channel: {
          const Tensor f = ops::reshape(h, {rows, cs->channels, cs->height, cs->width});
          h = ops::reshape(cam_channel(cs->layer, f, x, p), {rows, width});
          break;
        }
      }
    }
    if (capture) capture->push_back(h);
  }
  if (!bound.empty() && cursor != bound.size()) {
    throw std::invalid_argument("bound parameter count does not match the model");
  }
  return h;
}

FieldModel build_mlp(const MlpSpec& spec) {
  if (spec.layers < 1 || spec.width == 0 || spec.input_dim == 0 || spec.output_dim == 0) {
    throw std::invalid_argument("mlp needs at least one layer and positive widths");
  }
  std::vector<Stage> stages;
  std::size_t width = spec.input_dim;
  std::uint64_t stream = 0;
  switch (spec.encoding) {
    case MlpSpec::Encoding::None: break;
    case MlpSpec::Encoding::Gaussian: {
      auto enc = FourierEncoding::gaussian(spec.input_dim, spec.frequencies, spec.gaussian_scale,
                                           derive_seed(spec.seed, stream++), spec.include_input);
      width = enc.output_dim();
      stages.emplace_back(std::move(enc));
      break;
    }
    case MlpSpec::Encoding::PowerOfTwo: {
      auto enc = FourierEncoding::power_of_two(spec.input_dim, spec.frequencies, spec.include_input);
      width = enc.output_dim();
      stages.emplace_back(std::move(enc));
      ++stream;
      break;
    }
  }
  const std::size_t hidden = spec.layers - 1;
  std::vector<bool> cam_at(hidden, spec.cam && spec.cam_layers.empty());
  if (spec.cam) {
    for (std::size_t i : spec.cam_layers) {
      if (i >= hidden) {
        throw std::invalid_argument("cam placement " + std::to_string(i) +
                                    " does not name a hidden layer (have " +
                                    std::to_string(hidden) + ")");
      }
      cam_at[i] = true;
    }
  }
  for (std::size_t l = 0; l < hidden; ++l) {
    stages.emplace_back(init_linear(width, spec.width, derive_seed(spec.seed, stream++)));
    width = spec.width;
    if (cam_at[l]) {
      CamStage cs;
      cs.layer = CamLayer::make(spec.cam_mode, spec.grid_resolution, spec.cam_selector,
                                spec.grid_channels, spec.cam_normalize, spec.cam_epsilon);
      cs.layer.channel_norm = spec.channel_norm;
      cs.samples_per_ray = spec.samples_per_ray;
      cs.channels = spec.feature_channels;
      cs.height = spec.feature_height;
      cs.width = spec.feature_width;
      stages.emplace_back(std::move(cs));
    }
    stages.emplace_back(spec.hidden_activation);
  }
  stages.emplace_back(init_linear(width, spec.output_dim, derive_seed(spec.seed, stream++)));
  if (spec.sigmoid_head) stages.emplace_back(Activation::Sigmoid);
  return FieldModel(spec.input_dim, std::move(stages));
}

}  // namespace camf
