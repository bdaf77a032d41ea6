#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "camf/tensor.hpp"

namespace camf {

/// Learnable piecewise-(bi)linear function on the unit interval/square.
///
/// Values are stored as [d1, k] (rank 1) or [d1, d2, k] (rank 2); node i of
/// an axis with resolution d sits at coordinate i / (d - 1). Queries are
/// clamped to the closed unit domain, never wrapped.
struct ModulationGrid {
  std::vector<std::size_t> resolution;  // one entry per axis, each >= 2
  std::size_t channels = 1;
  Tensor values;

  static ModulationGrid constant(std::vector<std::size_t> resolution, std::size_t channels,
                                 Real value);

  std::size_t rank() const { return resolution.size(); }
  std::size_t node_count() const;
  Shape value_shape() const;
  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

/// Up to four touched nodes (flattened node index) and their weights.
struct InterpStencil {
  std::size_t count = 0;
  std::array<std::size_t, 4> node{};
  std::array<Real, 4> weight{};
};

/// Coordinates further than this outside [0, 1] are rejected.
inline constexpr double kDomainTolerance = 1e-6;

/// Per-query stencils for `coords` ([N] or [N x rank]). Weights sum to one.
std::vector<InterpStencil> grid_grad_weights(const ModulationGrid& grid, const Tensor& coords);

/// Differentiable w.r.t. `values`; coordinates are constants.
Tensor interp1(const Tensor& values, const Tensor& x);
Tensor interp2(const Tensor& values, const Tensor& xy);

Tensor interp1(const ModulationGrid& grid, const Tensor& x);
Tensor interp2(const ModulationGrid& grid, const Tensor& xy);
/// Dispatches on grid rank.
Tensor interpolate(const ModulationGrid& grid, const Tensor& values, const Tensor& coords);

}  // namespace camf
