#include "camf/cam.hpp"

#include <stdexcept>
#include <string>

#include "camf/ops.hpp"

namespace camf {
namespace {

const char* mode_name(CamMode m) {
  switch (m) {
    case CamMode::Scalar: return "scalar";
    case CamMode::Ray: return "ray";
    case CamMode::Channel: return "channel";
  }
  return "?";
}

Tensor modulate(const CamLayer& layer, const Tensor& features, const Tensor& coords,
                const CamParams& params, std::size_t first_norm_axis, Shape param_shape) {
  const std::size_t n = features.dim(0);
  const Tensor sel = select_coords(coords, layer.selector);
  if (sel.dim(0) != n) {
    throw std::invalid_argument(std::string("cam_") + mode_name(layer.mode) + ": " +
                                std::to_string(n) + " feature units but " +
                                std::to_string(sel.dim(0)) + " coordinate rows");
  }
  const Tensor gamma = ops::reshape(interpolate(layer.gamma, params.gamma, sel), param_shape);
  const Tensor beta = ops::reshape(interpolate(layer.beta, params.beta, sel), param_shape);
  const Tensor base =
      layer.normalize ? ops::standardize(features, first_norm_axis, layer.epsilon) : features;
  return ops::unit_affine(base, gamma, beta);
}

void require_mode(const CamLayer& layer, CamMode mode) {
  if (layer.mode != mode) {
    throw std::invalid_argument(std::string("layer configured for ") + mode_name(layer.mode) +
                                " mode used as " + mode_name(mode));
  }
}

void require_nonempty(const Tensor& f, std::size_t rank, const char* what) {
  if (f.rank() != rank) {
    throw std::invalid_argument(std::string(what) + " expects a rank-" + std::to_string(rank) +
                                " feature tensor, got " + to_string(f.shape()));
  }
  for (std::size_t i = 1; i < rank; ++i) {
    if (f.dim(i) == 0) {
      throw std::invalid_argument(std::string(what) + ": empty normalization unit in " +
                                  to_string(f.shape()));
    }
  }
}

}  // namespace

CamLayer CamLayer::make(CamMode mode, std::vector<std::size_t> resolution,
                        std::vector<std::size_t> selector, std::size_t grid_channels,
                        bool normalize, Real epsilon) {
  CamLayer layer;
  layer.mode = mode;
  layer.normalize = normalize;
  layer.epsilon = epsilon;
  layer.selector = std::move(selector);
  layer.gamma = ModulationGrid::constant(resolution, grid_channels, Real(1));
  layer.beta = ModulationGrid::constant(std::move(resolution), grid_channels, Real(0));
  layer.validate();
  return layer;
}

void CamLayer::validate() const {
  if (!(epsilon > 0)) throw std::invalid_argument("cam epsilon must be positive");
  gamma.validate();
  beta.validate();
  if (gamma.resolution != beta.resolution || gamma.channels != beta.channels) {
    throw std::invalid_argument("cam gamma and beta grids differ in shape");
  }
  if (mode != CamMode::Channel && gamma.channels != 1) {
    throw std::invalid_argument(std::string(mode_name(mode)) +
                                " mode uses single-channel grids");
  }
  if (!selector.empty() && selector.size() != gamma.rank()) {
    throw std::invalid_argument("cam selector picks " + std::to_string(selector.size()) +
                                " coordinates for a rank-" + std::to_string(gamma.rank()) +
                                " grid");
  }
}

Tensor select_coords(const Tensor& x, const std::vector<std::size_t>& selector) {
  if (selector.empty()) return x;
  if (x.rank() != 2) {
    throw std::invalid_argument("coordinates must be [N x D], got " + to_string(x.shape()));
  }
  const std::size_t n = x.dim(0), d = x.dim(1);
  for (std::size_t s : selector) {
    if (s >= d) {
      throw std::invalid_argument("coordinate selector index " + std::to_string(s) +
                                  " out of range for D=" + std::to_string(d));
    }
  }
  const auto src = x.data();
  std::vector<Real> out(n * selector.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < selector.size(); ++j)
      out[r * selector.size() + j] = src[r * d + selector[j]];
  return Tensor(Shape{n, selector.size()}, std::move(out));
}

Tensor cam_scalar(const CamLayer& layer, const Tensor& features, const Tensor& coords) {
  return cam_scalar(layer, features, coords, {layer.gamma.values, layer.beta.values});
}

Tensor cam_scalar(const CamLayer& layer, const Tensor& features, const Tensor& coords,
                  const CamParams& params) {
  require_mode(layer, CamMode::Scalar);
  require_nonempty(features, 2, "cam_scalar");
  return modulate(layer, features, coords, params, 1, {features.dim(0), 1});
}

Tensor cam_ray(const CamLayer& layer, const Tensor& features, const Tensor& coords) {
  return cam_ray(layer, features, coords, {layer.gamma.values, layer.beta.values});
}

Tensor cam_ray(const CamLayer& layer, const Tensor& features, const Tensor& coords,
               const CamParams& params) {
  require_mode(layer, CamMode::Ray);
  require_nonempty(features, 3, "cam_ray");
  return modulate(layer, features, coords, params, 1, {features.dim(0), 1, 1});
}

Tensor cam_channel(const CamLayer& layer, const Tensor& features, const Tensor& coords) {
  return cam_channel(layer, features, coords, {layer.gamma.values, layer.beta.values});
}

Tensor cam_channel(const CamLayer& layer, const Tensor& features, const Tensor& coords,
                   const CamParams& params) {
  require_mode(layer, CamMode::Channel);
  require_nonempty(features, 4, "cam_channel");
  const std::size_t c = features.dim(1);
  const std::size_t k = layer.gamma.channels;
  if (k != c && k != 1) {
    throw std::invalid_argument("cam_channel grid has " + std::to_string(k) +
                                " channels for a feature with C=" + std::to_string(c));
  }
  const std::size_t first = layer.channel_norm == ChannelNorm::Plane ? 2 : 1;
  return modulate(layer, features, coords, params, first, {features.dim(0), k, 1, 1});
}

Tensor cam_apply(const CamLayer& layer, const Tensor& features, const Tensor& coords,
                 const CamParams& params) {
  switch (layer.mode) {
    case CamMode::Scalar: return cam_scalar(layer, features, coords, params);
    case CamMode::Ray: return cam_ray(layer, features, coords, params);
    case CamMode::Channel: return cam_channel(layer, features, coords, params);
  }
  throw std::logic_error("unknown cam mode");
}

}  // namespace camf
