#include "camf/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace camf {
namespace {

struct AxisHit {
  std::size_t lo;
  double t;  // weight of node lo + 1
};

AxisHit locate(double x, std::size_t d) {
  if (!(x >= -kDomainTolerance && x <= 1.0 + kDomainTolerance)) {
    throw std::invalid_argument("grid coordinate " + std::to_string(x) +
                                " outside the unit domain");
  }
  x = std::min(1.0, std::max(0.0, x));
  double s = x * static_cast<double>(d - 1);
  // Inputs are stored in Real precision; snap queries that sit on a node.
  const double snapped = std::round(s);
  if (std::abs(s - snapped) <=
      64.0 * std::numeric_limits<Real>::epsilon() * static_cast<double>(d - 1)) {
    s = snapped;
  }
  auto lo = static_cast<std::size_t>(std::floor(s));
  if (lo >= d - 1) return {d - 2, 1.0};
  return {lo, s - static_cast<double>(lo)};
}

std::size_t query_count(const Tensor& coords, std::size_t rank) {
  if (rank == 1 && coords.rank() == 1) return coords.dim(0);
  if (coords.rank() != 2 || coords.dim(1) != rank) {
    throw std::invalid_argument("grid of rank " + std::to_string(rank) +
                                " queried with coordinates of shape " +
                                to_string(coords.shape()));
  }
  return coords.dim(0);
}

Shape resolution_of(const Tensor& values, std::size_t rank, std::size_t& channels) {
  if (values.rank() != rank + 1) {
    throw std::invalid_argument("grid values of shape " + to_string(values.shape()) +
                                " do not describe a rank-" + std::to_string(rank) + " grid");
  }
  Shape res(values.shape().begin(), values.shape().end() - 1);
  for (std::size_t d : res) {
    if (d < 2) throw std::invalid_argument("grid resolution must be at least 2 per axis");
  }
  channels = values.shape().back();
  return res;
}

std::vector<InterpStencil> stencils(const Shape& res, const Tensor& coords) {
  const std::size_t rank = res.size();
  const std::size_t n = query_count(coords, rank);
  const auto c = coords.data();
  std::vector<InterpStencil> out(n);
  for (std::size_t q = 0; q < n; ++q) {
    InterpStencil& st = out[q];
    if (rank == 1) {
      const AxisHit h = locate(c[q], res[0]);
      if (h.t == 0.0) {
        st.count = 1;
        st.node[0] = h.lo;
        st.weight[0] = Real(1);
      } else if (h.t == 1.0) {
        st.count = 1;
        st.node[0] = h.lo + 1;
        st.weight[0] = Real(1);
      } else {
        st.count = 2;
        st.node = {h.lo, h.lo + 1, 0, 0};
        st.weight = {static_cast<Real>(1.0 - h.t), static_cast<Real>(h.t), 0, 0};
      }
    } else {
      const AxisHit hx = locate(c[2 * q], res[0]);
      const AxisHit hy = locate(c[2 * q + 1], res[1]);
      const double wx[2] = {1.0 - hx.t, hx.t};
      const double wy[2] = {1.0 - hy.t, hy.t};
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          const double w = wx[i] * wy[j];
          if (w == 0.0) continue;
          st.node[st.count] = (hx.lo + i) * res[1] + (hy.lo + j);
          st.weight[st.count] = static_cast<Real>(w);
          ++st.count;
        }
      }
    }
  }
  return out;
}

Tensor interp_impl(const Tensor& values, const Tensor& coords, std::size_t rank) {
  if (coords.tracked()) {
    throw std::invalid_argument("grid interpolation does not differentiate coordinates");
  }
  std::size_t k = 0;
  const Shape res = resolution_of(values, rank, k);
  auto st = stencils(res, coords);
  const std::size_t n = st.size();
  const auto v = values.data();
  std::vector<Real> y(n * k, Real(0));
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t j = 0; j < st[q].count; ++j) {
      const Real w = st[q].weight[j];
      const std::size_t base = st[q].node[j] * k;
      for (std::size_t ch = 0; ch < k; ++ch) y[q * k + ch] += w * v[base + ch];
    }
  }
  return Tape::record(Tensor(Shape{n, k}, std::move(y)), {values, coords},
                      [st = std::move(st), k](std::span<const Real> g, auto grads) {
                        auto gv = grads[0];
                        if (gv.empty()) return;
                        for (std::size_t q = 0; q < st.size(); ++q) {
                          for (std::size_t j = 0; j < st[q].count; ++j) {
                            const Real w = st[q].weight[j];
                            const std::size_t base = st[q].node[j] * k;
                            for (std::size_t ch = 0; ch < k; ++ch)
                              gv[base + ch] += w * g[q * k + ch];
                          }
                        }
                      });
}

}  // namespace

ModulationGrid ModulationGrid::constant(std::vector<std::size_t> resolution,
                                        std::size_t channels, Real value) {
  ModulationGrid g;
  g.resolution = std::move(resolution);
  g.channels = channels;
  g.values = Tensor(g.value_shape(), value);
  g.validate();
  return g;
}

std::size_t ModulationGrid::node_count() const { return numel(resolution); }

Shape ModulationGrid::value_shape() const {
  Shape s = resolution;
  s.push_back(channels);
  return s;
}

void ModulationGrid::validate() const {
  if (rank() != 1 && rank() != 2) {
    throw std::invalid_argument("modulation grids have rank 1 or 2, got " +
                                std::to_string(rank()));
  }
  for (std::size_t d : resolution) {
    if (d < 2) throw std::invalid_argument("grid resolution must be at least 2 per axis");
  }
  if (channels == 0) throw std::invalid_argument("grid needs at least one channel");
  if (values.shape() != value_shape()) {
    throw std::invalid_argument("grid values have shape " + to_string(values.shape()) +
                                ", expected " + to_string(value_shape()));
  }
  for (Real v : values.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("grid holds a non-finite value");
  }
}

std::vector<InterpStencil> grid_grad_weights(const ModulationGrid& grid, const Tensor& coords) {
  return stencils(grid.resolution, coords);
}

Tensor interp1(const Tensor& values, const Tensor& x) { return interp_impl(values, x, 1); }
Tensor interp2(const Tensor& values, const Tensor& xy) { return interp_impl(values, xy, 2); }

Tensor interp1(const ModulationGrid& grid, const Tensor& x) { return interp1(grid.values, x); }
Tensor interp2(const ModulationGrid& grid, const Tensor& xy) { return interp2(grid.values, xy); }

Tensor interpolate(const ModulationGrid& grid, const Tensor& values, const Tensor& coords) {
  return grid.rank() == 1 ? interp1(values, coords) : interp2(values, coords);
}

}  // namespace camf
