#pragma once

#include <cstddef>
#include <vector>

#include "camf/grid.hpp"
#include "camf/tensor.hpp"

namespace camf {

/// Which axes form one normalization unit and how (gamma, beta) broadcast.
enum class CamMode {
  Scalar,   // F [N x C]: unit = row, one (gamma, beta) per row
  Ray,      // F [N x S x C]: unit = ray slab S x C, one (gamma, beta) per ray
  Channel,  // F [N x C x H x W]: per-channel modulation read from a [d_t x C] grid
};

/// Normalization unit for Channel mode. Plane normalizes each (n, c) over
/// H x W; Volume normalizes each n over C x H x W.
enum class ChannelNorm { Plane, Volume };

inline constexpr Real kDefaultCamEpsilon = Real(1e-5);

/// Coordinate-conditioned standardize-then-affine unit.
///
/// Gamma and beta are read from single-channel grids (or C-channel grids in
/// Channel mode) at the coordinates chosen by `selector`. Fresh layers start
/// with gamma = 1 and beta = 0, i.e. pure standardization.
struct CamLayer {
  CamMode mode = CamMode::Scalar;
  bool normalize = true;
  Real epsilon = kDefaultCamEpsilon;
  /// Columns of the coordinate tensor feeding the grids; empty = all columns.
  std::vector<std::size_t> selector;
  ChannelNorm channel_norm = ChannelNorm::Plane;
  ModulationGrid gamma;
  ModulationGrid beta;

  static CamLayer make(CamMode mode, std::vector<std::size_t> resolution,
                       std::vector<std::size_t> selector = {}, std::size_t grid_channels = 1,
                       bool normalize = true, Real epsilon = kDefaultCamEpsilon);

  void validate() const;
};

/// Column subset of X [N x D] in the given order. Empty selector = X itself.
Tensor select_coords(const Tensor& x, const std::vector<std::size_t>& selector);

/// The grid tensors actually used for a forward pass (possibly tape-tracked
/// aliases of the layer's own values).
struct CamParams {
  Tensor gamma;
  Tensor beta;
};

Tensor cam_scalar(const CamLayer& layer, const Tensor& features, const Tensor& coords);
Tensor cam_scalar(const CamLayer& layer, const Tensor& features, const Tensor& coords,
                  const CamParams& params);

/// `coords` holds one row per ray.
Tensor cam_ray(const CamLayer& layer, const Tensor& features, const Tensor& coords);
Tensor cam_ray(const CamLayer& layer, const Tensor& features, const Tensor& coords,
               const CamParams& params);

/// `coords` holds one row per frame (typically the time column).
Tensor cam_channel(const CamLayer& layer, const Tensor& features, const Tensor& coords);
Tensor cam_channel(const CamLayer& layer, const Tensor& features, const Tensor& coords,
                   const CamParams& params);

/// Dispatches on layer.mode.
Tensor cam_apply(const CamLayer& layer, const Tensor& features, const Tensor& coords,
                 const CamParams& params);

}  // namespace camf
